//! Synthetic thermal-style dataset: bright elliptical blobs of varying
//! height on a textured, noisy background, with exact annotations. A
//! desk-scale stand-in for infrared pedestrian footage — blobs play the
//! role of warm bodies, and rectangular clutter supplies the hard
//! negatives a mining round is supposed to clean up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{AnnotatedFrame, Image};
use crate::scalar::Real;
use crate::tensor::BoundingBox;
use crate::Result;

/// Detector window used throughout the synthetic experiments (rows, cols):
/// a 2:1 upright window, matching the blob aspect ratio.
pub const DETECTOR_SHAPE: (usize, usize) = (40, 20);

/// Geometric scale ladder covering blob heights 20–60 px with the
/// [`DETECTOR_SHAPE`] window: 40/60 ≈ 0.667 up to 40/20 = 2.0.
pub fn default_scales() -> Vec<f64> {
    let steps = 7;
    let top: f64 = 2.0;
    let ratio = (1.0f64 / 3.0).powf(1.0 / (steps - 1) as f64);
    (0..steps).map(|i| top * ratio.powi(i as i32)).collect()
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub train_frames: usize,
    pub test_frames: usize,
    pub height: usize,
    pub width: usize,
    /// Blob height range in pixels; width is always half the height.
    pub blob_h: (u32, u32),
    /// Blobs per frame, inclusive range.
    pub blobs: (usize, usize),
    /// Bright non-pedestrian shapes per frame (bars and squares).
    pub clutter: usize,
    /// Gaussian pixel noise, standard deviation in grey levels.
    pub noise: f64,
    /// Low-frequency background texture amplitude in grey levels.
    pub texture: f64,
    /// Peak blob brightness above the background.
    pub contrast: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_frames: 200,
            test_frames: 100,
            height: 129,
            width: 164,
            blob_h: (20, 60),
            blobs: (1, 3),
            clutter: 2,
            noise: 5.0,
            texture: 6.0,
            contrast: 110.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset<T> {
    pub train: Vec<AnnotatedFrame<T>>,
    pub test: Vec<AnnotatedFrame<T>>,
}

/// Generate the train and test splits from one seeded stream, so a fixed
/// seed pins every pixel of both splits.
pub fn generate<T: Real>(cfg: &SynthConfig) -> Result<SynthDataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = (0..cfg.train_frames).map(|_| frame(cfg, &mut rng)).collect::<Result<_>>()?;
    let test = (0..cfg.test_frames).map(|_| frame(cfg, &mut rng)).collect::<Result<_>>()?;
    Ok(SynthDataset { train, test })
}

fn frame<T: Real>(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<AnnotatedFrame<T>> {
    let (h, w) = (cfg.height, cfg.width);
    let mut px = vec![60.0f64; h * w];

    // Smooth background drift: a few long-wavelength sinusoids.
    for _ in 0..3 {
        let amp = cfg.texture * rng.gen_range(0.5..1.0);
        let wavelength = rng.gen_range(45.0..130.0);
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let (fy, fx) = (theta.cos() / wavelength, theta.sin() / wavelength);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        for r in 0..h {
            for c in 0..w {
                px[r * w + c] += amp
                    * (std::f64::consts::TAU * (fy * r as f64 + fx * c as f64) + phase).sin();
            }
        }
    }

    // Pedestrian stand-ins: bright 2:1 ellipses. The annotation is the
    // exact box the ellipse is drawn into; every row and column of that
    // box receives lit pixels, so the box is tight.
    let mut truths: Vec<BoundingBox> = Vec::new();
    let n_blobs = rng.gen_range(cfg.blobs.0..=cfg.blobs.1);
    for _ in 0..n_blobs {
        let mut placed = None;
        for _ in 0..40 {
            let bh = rng.gen_range(cfg.blob_h.0..=cfg.blob_h.1);
            let bw = (bh / 2).max(2);
            if bh as usize + 2 >= h || bw as usize + 2 >= w {
                continue;
            }
            let y = rng.gen_range(1..h as i64 - bh as i64 - 1);
            let x = rng.gen_range(1..w as i64 - bw as i64 - 1);
            let b = BoundingBox::new(x, y, bw, bh);
            if truths.iter().all(|t| t.iou(&b) < 0.05) {
                placed = Some(b);
                break;
            }
        }
        let Some(b) = placed else { continue };
        let brightness = cfg.contrast * rng.gen_range(0.85..1.15);
        draw_ellipse(&mut px, w, &b, brightness);
        truths.push(b);
    }

    // Clutter: bright shapes that are pedestrian-sized but not
    // pedestrian-shaped — sharp-cornered bars and squares.
    for i in 0..cfg.clutter {
        for _ in 0..40 {
            let (ch, cw) = if i % 2 == 0 {
                let ch = rng.gen_range(20u32..=56);
                (ch, (ch / 2).max(3))
            } else {
                let s = rng.gen_range(16u32..=40);
                (s, s)
            };
            if ch as usize + 2 >= h || cw as usize + 2 >= w {
                continue;
            }
            let y = rng.gen_range(1..h as i64 - ch as i64 - 1);
            let x = rng.gen_range(1..w as i64 - cw as i64 - 1);
            let b = BoundingBox::new(x, y, cw, ch);
            if truths.iter().all(|t| t.iou(&b) < 0.02 && t.intersection_area(&b) == 0) {
                let brightness = cfg.contrast * rng.gen_range(0.8..1.0);
                draw_rect(&mut px, w, &b, brightness);
                break;
            }
        }
    }

    // Sensor noise, Box-Muller from the same stream.
    if cfg.noise > 0.0 {
        for v in &mut px {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            *v += cfg.noise * z;
        }
    }

    let pixels: Vec<T> = px.iter().map(|&v| T::of(v.clamp(0.0, 255.0))).collect();
    Ok(AnnotatedFrame { image: Image::from_pixels(h, w, pixels)?, truths })
}

/// Add an ellipse inscribed in `b` with a soft rim. The rim weight stays
/// well above zero so the lit extent equals the box exactly.
fn draw_ellipse(px: &mut [f64], stride: usize, b: &BoundingBox, brightness: f64) {
    for r in b.y..b.bottom() {
        for c in b.x..b.right() {
            let ndy = 2.0 * (r - b.y) as f64 + 1.0;
            let ndy = ndy / b.h as f64 - 1.0;
            let ndx = 2.0 * (c - b.x) as f64 + 1.0;
            let ndx = ndx / b.w as f64 - 1.0;
            let rho = (ndx * ndx + ndy * ndy).sqrt();
            if rho <= 1.0 {
                let edge = if rho <= 0.8 { 1.0 } else { 0.3 + 0.7 * (1.0 - rho) / 0.2 };
                px[r as usize * stride + c as usize] += brightness * edge;
            }
        }
    }
}

fn draw_rect(px: &mut [f64], stride: usize, b: &BoundingBox, brightness: f64) {
    for r in b.y..b.bottom() {
        for c in b.x..b.right() {
            px[r as usize * stride + c as usize] += brightness;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_is_bit_identical() {
        let cfg = SynthConfig { train_frames: 3, test_frames: 2, ..SynthConfig::default() };
        let a = generate::<f64>(&cfg).unwrap();
        let b = generate::<f64>(&cfg).unwrap();
        assert_eq!(a.train.len(), 3);
        assert_eq!(a.test.len(), 2);
        for (fa, fb) in a.train.iter().chain(&a.test).zip(b.train.iter().chain(&b.test)) {
            assert_eq!(fa.truths, fb.truths);
            assert_eq!(fa.image.pixels(), fb.image.pixels());
        }
        let other = SynthConfig { seed: 8, ..cfg };
        let c = generate::<f64>(&other).unwrap();
        assert_ne!(a.train[0].image.pixels(), c.train[0].image.pixels());
    }

    #[test]
    fn noiseless_blob_annotation_is_exactly_the_lit_extent() {
        let cfg = SynthConfig {
            train_frames: 6,
            test_frames: 0,
            blobs: (1, 1),
            clutter: 0,
            noise: 0.0,
            texture: 0.0,
            ..SynthConfig::default()
        };
        let data = generate::<f64>(&cfg).unwrap();
        for f in &data.train {
            assert_eq!(f.truths.len(), 1);
            let t = f.truths[0];
            let (mut min_r, mut max_r, mut min_c, mut max_c) =
                (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
            for r in 0..cfg.height {
                for c in 0..cfg.width {
                    if f.image.get(r, c) > 60.5 {
                        min_r = min_r.min(r as i64);
                        max_r = max_r.max(r as i64);
                        min_c = min_c.min(c as i64);
                        max_c = max_c.max(c as i64);
                    }
                }
            }
            assert_eq!(min_r, t.y);
            assert_eq!(max_r, t.bottom() - 1);
            assert_eq!(min_c, t.x);
            assert_eq!(max_c, t.right() - 1);
        }
    }

    #[test]
    fn blobs_stay_inside_the_frame_and_within_height_bounds() {
        let cfg = SynthConfig { train_frames: 25, test_frames: 0, ..SynthConfig::default() };
        let data = generate::<f64>(&cfg).unwrap();
        let mut total = 0;
        for f in &data.train {
            for t in &f.truths {
                total += 1;
                assert!(t.x >= 0 && t.y >= 0);
                assert!(t.right() <= cfg.width as i64 && t.bottom() <= cfg.height as i64);
                assert!(t.h >= cfg.blob_h.0 && t.h <= cfg.blob_h.1);
                assert_eq!(t.w, (t.h / 2).max(2));
            }
            for pair in f.truths.windows(2) {
                assert!(pair[0].iou(&pair[1]) < 0.05);
            }
        }
        assert!(total >= 25, "at least one blob per frame");
    }

    #[test]
    fn scale_ladder_covers_the_blob_range_geometrically() {
        let s = default_scales();
        assert_eq!(s.len(), 7);
        assert!((s[0] - 2.0).abs() < 1e-12);
        assert!((s[6] - 2.0 / 3.0).abs() < 1e-12);
        for w in s.windows(2) {
            assert!(w[1] < w[0]);
            let ratio = w[1] / w[0];
            assert!((ratio - s[1] / s[0]).abs() < 1e-12, "geometric spacing");
        }
    }

    #[test]
    fn pixels_are_clamped_to_eight_bit_range() {
        let cfg = SynthConfig {
            train_frames: 4,
            test_frames: 0,
            noise: 40.0,
            contrast: 200.0,
            ..SynthConfig::default()
        };
        let data = generate::<f64>(&cfg).unwrap();
        for f in &data.train {
            for &v in f.image.pixels() {
                assert!((0.0..=255.0).contains(&v));
            }
        }
    }
}
