//! Multiscale search: a feature pyramid over resized copies of the image,
//! score fusion onto a common grid, local-maximum selection, and greedy
//! non-maximum suppression.
//!
//! Each pyramid level resizes the image by one ladder scale, recomputes
//! features there, and scores the detector over the level. Score planes
//! are then resampled onto the largest level's grid where a per-position
//! max (with the winning scale recorded) makes peaks comparable across
//! scales.

use rayon::prelude::*;
use rustfft::FftNum;

use crate::fft::{prepare, score_map, ScoreMap};
use crate::image::Image;
use crate::model::Model;
use crate::scalar::Real;
use crate::tensor::BoundingBox;
use crate::{Error, Result};

/// One detector hit mapped back to original-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T> {
    pub bbox: BoundingBox,
    pub score: T,
    pub scale: f64,
}

/// Score plane of a single pyramid level, tagged with its scale.
pub struct PyramidLevel<T> {
    pub scale: f64,
    pub map: ScoreMap<T>,
}

/// Per-position maximum over resampled level planes, on the largest
/// level's grid. `scale_of` records which level supplied each score.
pub struct FusedMap<T> {
    m: usize,
    n: usize,
    pub scores: Vec<T>,
    pub valid: Vec<bool>,
    pub scale_of: Vec<f64>,
}

impl<T: Real> FusedMap<T> {
    pub fn extent(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    #[inline]
    pub fn score(&self, r: usize, c: usize) -> T {
        self.scores[r * self.n + c]
    }

    #[inline]
    pub fn is_valid(&self, r: usize, c: usize) -> bool {
        self.valid[r * self.n + c]
    }

    /// Debug visualization, same rendering convention as per-level maps.
    pub fn save_pgm(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..self.scores.len() {
            if self.valid[i] {
                let v = self.scores[i].to_f64_lossy();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        let pixels: Vec<T> = self
            .scores
            .iter()
            .zip(&self.valid)
            .map(|(&s, &ok)| {
                if ok {
                    T::of(((s.to_f64_lossy() - lo) / span * 255.0).clamp(0.0, 255.0))
                } else {
                    T::zero()
                }
            })
            .collect();
        Image::from_pixels(self.m, self.n, pixels)?.save_pgm(path)
    }
}

/// Build every feasible pyramid level: resize by each ladder scale
/// (extent rounded), recompute features, and score the detector there.
/// Levels too small for the detector window are skipped.
pub fn build_pyramid<T: Real + FftNum>(
    img: &Image<T>,
    model: &Model<T>,
) -> Result<Vec<PyramidLevel<T>>> {
    let (det_m, det_n, _) = model.detector_shape();
    let (orig_m, orig_n) = (img.height(), img.width());

    let feasible: Vec<(f64, usize, usize)> = model
        .scales
        .iter()
        .map(|&s| {
            let lm = (orig_m as f64 * s).round() as usize;
            let ln = (orig_n as f64 * s).round() as usize;
            (s, lm, ln)
        })
        .filter(|&(_, lm, ln)| lm >= det_m && ln >= det_n && lm >= 3 && ln >= 3)
        .collect();
    if feasible.is_empty() {
        return Err(Error::Validation(format!(
            "image {orig_m}x{orig_n} is too small for detector {det_m}x{det_n} at any scale"
        )));
    }

    feasible
        .into_par_iter()
        .map(|(s, lm, ln)| {
            let level_img = img.resized(lm, ln);
            let features = model.features(&level_img)?;
            let det = prepare(&model.template, model.bias, (lm, ln))?;
            let map = score_map(&features, &det, s)?;
            Ok(PyramidLevel { scale: s, map })
        })
        .collect()
}

/// Resample every level onto the largest level's grid (center-aligned
/// bilinear) and take the per-position maximum.
///
/// A resampled value is valid only when every tap with nonzero weight is
/// valid on its level, so interpolation never launders scores out of
/// invalid positions; among levels, invalid samples never win.
pub fn fuse<T: Real>(levels: &[PyramidLevel<T>]) -> Result<FusedMap<T>> {
    if levels.is_empty() {
        return Err(Error::Validation("cannot fuse an empty pyramid".into()));
    }
    let (m, n) = levels
        .iter()
        .map(|l| l.map.extent())
        .max_by_key(|&(m, n)| (m as u64) * (n as u64))
        .unwrap();

    let mut scores = vec![T::neg_infinity(); m * n];
    let mut valid = vec![false; m * n];
    let mut scale_of = vec![0.0f64; m * n];

    for level in levels {
        let (lm, ln) = level.map.extent();
        let rs = lm as f64 / m as f64;
        let cs = ln as f64 / n as f64;
        for r in 0..m {
            let sr = (r as f64 + 0.5) * rs - 0.5;
            let r0 = (sr.floor().max(0.0) as usize).min(lm - 1);
            let r1 = (r0 + 1).min(lm - 1);
            let fr = (sr - sr.floor()).clamp(0.0, 1.0);
            let fr = if sr < 0.0 { 0.0 } else { fr };
            for c in 0..n {
                let sc = (c as f64 + 0.5) * cs - 0.5;
                let c0 = (sc.floor().max(0.0) as usize).min(ln - 1);
                let c1 = (c0 + 1).min(ln - 1);
                let fc = (sc - sc.floor()).clamp(0.0, 1.0);
                let fc = if sc < 0.0 { 0.0 } else { fc };

                let taps = [
                    (r0, c0, (1.0 - fr) * (1.0 - fc)),
                    (r0, c1, (1.0 - fr) * fc),
                    (r1, c0, fr * (1.0 - fc)),
                    (r1, c1, fr * fc),
                ];
                let mut value = 0.0f64;
                let mut ok = true;
                for &(tr, tc, wgt) in &taps {
                    if wgt == 0.0 {
                        continue;
                    }
                    if !level.map.is_valid(tr, tc) {
                        ok = false;
                        break;
                    }
                    value += wgt * level.map.score(tr, tc).to_f64_lossy();
                }
                if !ok {
                    continue;
                }
                let v = T::of(value);
                let idx = r * n + c;
                if !valid[idx] || v > scores[idx] {
                    scores[idx] = v;
                    valid[idx] = true;
                    scale_of[idx] = level.scale;
                }
            }
        }
    }
    Ok(FusedMap { m, n, scores, valid, scale_of })
}

/// Strict 8-neighbour local maxima over valid fused positions. Equal
/// scores break ties by raster order: the earlier position is the peak.
/// Invalid neighbours never suppress a peak.
pub fn local_maxima<T: Real>(fused: &FusedMap<T>) -> Vec<(usize, usize, T, f64)> {
    let (m, n) = fused.extent();
    let mut peaks = Vec::new();
    for r in 0..m {
        for c in 0..n {
            let idx = r * n + c;
            if !fused.valid[idx] {
                continue;
            }
            let sp = fused.scores[idx];
            let mut is_peak = true;
            'scan: for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= m as i64 || nc >= n as i64 {
                        continue;
                    }
                    let q = nr as usize * n + nc as usize;
                    if !fused.valid[q] {
                        continue;
                    }
                    let sq = fused.scores[q];
                    if sq > sp || (sq == sp && q < idx) {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                peaks.push((r, c, sp, fused.scale_of[idx]));
            }
        }
    }
    peaks
}

/// Greedy non-maximum suppression: walk candidates in descending score
/// (ties by earlier index) and drop any box overlapping a kept one by
/// more than the IoU threshold.
pub fn nms<T: Real>(detections: Vec<Detection<T>>, iou_threshold: f64) -> Vec<Detection<T>> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .partial_cmp(&detections[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut kept: Vec<Detection<T>> = Vec::new();
    for &i in &order {
        let cand = &detections[i];
        if kept.iter().all(|k| k.bbox.iou(&cand.bbox) <= iou_threshold) {
            kept.push(*cand);
        }
    }
    kept
}

/// Map a fused-grid peak back to an original-image box. Fused and
/// original grids are center-aligned, so composing the two resamplings
/// cancels the level extent: `orig = (fused + 0.5) · orig_extent /
/// fused_extent − 0.5`. The box takes the detector extent divided by the
/// winning scale, clamped inside the image.
pub fn peak_to_box(
    peak: (usize, usize),
    fused_extent: (usize, usize),
    orig_extent: (usize, usize),
    det_extent: (usize, usize),
    scale: f64,
) -> BoundingBox {
    let (r, c) = peak;
    let (fm, fn_) = fused_extent;
    let (om, on) = orig_extent;
    let (dm, dn) = det_extent;

    let y = (r as f64 + 0.5) * om as f64 / fm as f64 - 0.5;
    let x = (c as f64 + 0.5) * on as f64 / fn_ as f64 - 0.5;
    let h = ((dm as f64 / scale).round() as u32).clamp(1, om as u32);
    let w = ((dn as f64 / scale).round() as u32).clamp(1, on as u32);
    let y = (y.round() as i64).clamp(0, om as i64 - h as i64);
    let x = (x.round() as i64).clamp(0, on as i64 - w as i64);
    BoundingBox::new(x, y, w, h)
}

/// IoU above which two boxes are considered the same object.
pub const NMS_IOU: f64 = 0.5;

/// Full multiscale detection: pyramid, fusion, peak selection, score
/// threshold, suppression. Output is sorted by descending score.
pub fn detect<T: Real + FftNum>(img: &Image<T>, model: &Model<T>) -> Result<Vec<Detection<T>>> {
    let levels = build_pyramid(img, model)?;
    let fused = fuse(&levels)?;
    Ok(select_detections(&fused, img, model))
}

/// Peak selection half of [`detect`], reusable when the caller keeps the
/// fused map around (e.g. for debug dumps).
pub fn select_detections<T: Real>(
    fused: &FusedMap<T>,
    img: &Image<T>,
    model: &Model<T>,
) -> Vec<Detection<T>> {
    let (det_m, det_n, _) = model.detector_shape();
    let orig = (img.height(), img.width());
    let threshold = T::of(model.threshold);

    let candidates: Vec<Detection<T>> = local_maxima(fused)
        .into_iter()
        .filter(|&(_, _, s, _)| s >= threshold)
        .map(|(r, c, score, scale)| Detection {
            bbox: peak_to_box((r, c), fused.extent(), orig, (det_m, det_n), scale),
            score,
            scale,
        })
        .collect();
    nms(candidates, NMS_IOU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsk::LskParams;
    use crate::pca::PcaBasis;
    use crate::tensor::Tensor3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plain_map(m: usize, n: usize, det: (usize, usize), fill: f64) -> ScoreMap<f64> {
        let w = Tensor3::from_vec(det.0, det.1, 1, vec![1.0; det.0 * det.1]).unwrap();
        let f = Tensor3::from_vec(m, n, 1, vec![fill; m * n]).unwrap();
        let p = prepare(&w, 0.0, (m, n)).unwrap();
        score_map(&f, &p, 1.0).unwrap()
    }

    fn hand_map(m: usize, n: usize, scores: Vec<f64>, valid: Vec<bool>) -> ScoreMap<f64> {
        // Build a real map and then overwrite its planes so the struct
        // invariants (extent bookkeeping) stay intact.
        let mut map = plain_map(m, n, (1, 1), 1.0);
        map.scores = scores;
        map.valid = valid;
        map
    }

    #[test]
    fn fusing_a_single_level_is_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let m = 9;
        let n = 11;
        let scores: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let valid: Vec<bool> = (0..m * n).map(|_| rng.gen_bool(0.7)).collect();
        let level =
            PyramidLevel { scale: 1.25, map: hand_map(m, n, scores.clone(), valid.clone()) };
        let fused = fuse(&[level]).unwrap();
        assert_eq!(fused.extent(), (m, n));
        for i in 0..m * n {
            assert_eq!(fused.valid[i], valid[i], "tap {i}");
            if valid[i] {
                assert_eq!(fused.scores[i], scores[i]);
                assert_eq!(fused.scale_of[i], 1.25);
            }
        }
    }

    #[test]
    fn fusion_takes_the_maximum_and_tags_the_scale() {
        let m = 6;
        let n = 6;
        let mut a = vec![0.25f64; m * n];
        let b = vec![0.5f64; m * n];
        a[14] = 0.9;
        let levels = vec![
            PyramidLevel { scale: 2.0, map: hand_map(m, n, a, vec![true; m * n]) },
            PyramidLevel { scale: 1.0, map: hand_map(m, n, b, vec![true; m * n]) },
        ];
        let fused = fuse(&levels).unwrap();
        assert_eq!(fused.scores[14], 0.9);
        assert_eq!(fused.scale_of[14], 2.0);
        assert_eq!(fused.scores[0], 0.5);
        assert_eq!(fused.scale_of[0], 1.0);
    }

    #[test]
    fn upsampled_levels_interpolate_and_propagate_invalidity() {
        // A 2x2 level fused onto a 4x4 grid: the centre of the fused grid
        // blends all four level samples; marking one level sample invalid
        // kills every fused position that draws on it with weight > 0.
        let level2 = hand_map(2, 2, vec![0.0, 1.0, 2.0, 3.0], vec![true; 4]);
        let anchor4 = hand_map(4, 4, vec![-10.0; 16], vec![true; 16]);
        let fused = fuse(&[
            PyramidLevel { scale: 0.5, map: level2 },
            PyramidLevel { scale: 1.0, map: anchor4 },
        ])
        .unwrap();
        assert_eq!(fused.extent(), (4, 4));
        // Fused (1,1) maps to level coordinate (0.25, 0.25):
        // bilinear(0,1,2,3) with fr=fc=0.25 = 0.75 + 0.25·0.25·... compute:
        // (1-.25)(1-.25)*0 + (1-.25)(.25)*1 + (.25)(1-.25)*2 + (.25)(.25)*3
        let expect = 0.75 * 0.25 * 1.0 + 0.25 * 0.75 * 2.0 + 0.0625 * 3.0;
        assert!((fused.score(1, 1) - expect).abs() < 1e-12);
        assert_eq!(fused.scale_of[5], 0.5);

        // Now invalidate the level's top-right sample.
        let level2 = hand_map(2, 2, vec![0.0, 1.0, 2.0, 3.0], vec![true, false, true, true]);
        let anchor4 = hand_map(4, 4, vec![-10.0; 16], vec![true; 16]);
        let fused = fuse(&[
            PyramidLevel { scale: 0.5, map: level2 },
            PyramidLevel { scale: 1.0, map: anchor4 },
        ])
        .unwrap();
        // (1,1) draws on the invalid sample with weight 0.1875 > 0, so the
        // small level contributes nothing there and the anchor wins.
        assert!((fused.score(1, 1) - -10.0).abs() < 1e-12);
        assert_eq!(fused.scale_of[5], 1.0);
        // (1,0) maps to level (0.25, -0.25): column taps clamp to c0=c1=0,
        // the invalid sample only ever gets weight 0, so the blend of the
        // left column survives: 0.75·0 + 0.25·2.
        assert!((fused.score(1, 0) - 0.5).abs() < 1e-12);
        assert_eq!(fused.scale_of[4], 0.5);
    }

    #[test]
    fn local_maxima_respect_strictness_and_raster_ties() {
        let m = 5;
        let n = 5;
        let mut scores = vec![0.0f64; m * n];
        scores[6] = 1.0; // (1,1)
        scores[7] = 1.0; // (1,2) ties with (1,1): raster-earlier wins
        scores[18] = 2.0; // (3,3) isolated peak
        let fused = FusedMap {
            m,
            n,
            scores,
            valid: vec![true; m * n],
            scale_of: vec![1.0; m * n],
        };
        let peaks = local_maxima(&fused);
        assert_eq!(
            peaks.iter().map(|&(r, c, _, _)| (r, c)).collect::<Vec<_>>(),
            vec![(1, 1), (3, 3)]
        );
    }

    #[test]
    fn invalid_neighbours_do_not_suppress_peaks() {
        let m = 3;
        let n = 3;
        let mut scores = vec![f64::NEG_INFINITY; m * n];
        let mut valid = vec![false; m * n];
        scores[4] = 0.5;
        valid[4] = true;
        scores[5] = 9.0; // higher, but invalid
        let fused = FusedMap { m, n, scores, valid, scale_of: vec![1.0; m * n] };
        let peaks = local_maxima(&fused);
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].0, peaks[0].1), (1, 1));
    }

    #[test]
    fn nms_suppresses_by_iou_and_keeps_disjoint_boxes() {
        let d = |x, y, s| Detection::<f64> {
            bbox: BoundingBox::new(x, y, 10, 10),
            score: s,
            scale: 1.0,
        };
        // Box at (0,0) and (0,2): intersection 8·10=80, union 120, IoU 2/3.
        // Box at (30,0) is disjoint.
        let kept = nms(vec![d(0, 0, 0.9), d(2, 0, 0.8), d(30, 0, 0.1)], 0.5);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].bbox.x, 0);
        assert_eq!(kept[1].bbox.x, 30);
        // At threshold 0.7 the overlap no longer suppresses.
        let kept = nms(vec![d(0, 0, 0.9), d(2, 0, 0.8), d(30, 0, 0.1)], 0.7);
        assert_eq!(kept.len(), 3);
        // Scores order the greedy walk regardless of input order.
        let kept = nms(vec![d(2, 0, 0.8), d(0, 0, 0.9)], 0.5);
        assert_eq!(kept[0].score, 0.9);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn peak_mapping_composes_center_aligned_grids() {
        // Fused grid twice the original extent: fused (9, 13) lands at
        // original ((9.5)·0.5−0.5, (13.5)·0.5−0.5) = (4.25, 6.25) → (4, 6).
        let b = peak_to_box((9, 13), (40, 60), (20, 30), (8, 6), 2.0);
        assert_eq!((b.y, b.x), (4, 6));
        assert_eq!((b.h, b.w), (4, 3));
        // Identity extents at scale 1: position passes through.
        let b = peak_to_box((3, 7), (20, 30), (20, 30), (8, 6), 1.0);
        assert_eq!((b.y, b.x, b.h, b.w), (3, 7, 8, 6));
        // Clamping keeps the box inside the image.
        let b = peak_to_box((19, 29), (20, 30), (20, 30), (8, 6), 1.0);
        assert_eq!((b.y, b.x), (12, 24));
    }

    fn identity_model(det_m: usize, det_n: usize, scales: Vec<f64>) -> Model<f64> {
        let lsk = LskParams::default();
        Model::new(
            lsk,
            PcaBasis::identity(lsk.descriptor_len()),
            Tensor3::zeros(det_m, det_n, lsk.descriptor_len()),
            0.0,
            scales,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn detect_finds_a_planted_feature_patch() {
        // Template = the image's own feature window at a known position;
        // by Cauchy-Schwarz that window scores ||W|| + b and generically
        // beats every other window.
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let img = Image::from_pixels(
            36,
            44,
            (0..36 * 44).map(|_| rng.gen_range(0.0..255.0)).collect::<Vec<f64>>(),
        )
        .unwrap();
        let mut model = identity_model(9, 7, vec![1.0]);
        let features = model.features(&img).unwrap();
        let window = features
            .crop(&BoundingBox::new(20, 13, 7, 9))
            .unwrap();
        model.template = window;

        let hits = detect(&img, &model).unwrap();
        assert!(!hits.is_empty());
        let top = hits[0];
        assert_eq!((top.bbox.y, top.bbox.x), (13, 20));
        assert_eq!((top.bbox.h, top.bbox.w), (9, 7));
        assert_eq!(top.scale, 1.0);
        let expect = model.template.frobenius_norm();
        assert!((top.score - expect).abs() < 1e-9, "score {} vs {expect}", top.score);
        // Output is sorted by descending score.
        for pair in hits.windows(2) {
            assert!(pair[0].score >= pair[1].score);
        }
    }

    #[test]
    fn detect_survives_a_two_scale_ladder() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let img = Image::from_pixels(
            40,
            40,
            (0..40 * 40).map(|_| rng.gen_range(0.0..255.0)).collect::<Vec<f64>>(),
        )
        .unwrap();
        let mut model = identity_model(9, 7, vec![1.0, 0.6]);
        let features = model.features(&img).unwrap();
        model.template = features.crop(&BoundingBox::new(11, 17, 7, 9)).unwrap();

        let hits = detect(&img, &model).unwrap();
        assert!(!hits.is_empty());
        let top = hits[0];
        assert_eq!(top.scale, 1.0);
        assert!((top.bbox.y - 17).abs() <= 1 && (top.bbox.x - 11).abs() <= 1);
    }

    #[test]
    fn tiny_images_are_rejected_when_no_level_fits() {
        let img = Image::<f64>::constant(10, 10, 128.0);
        let model = identity_model(20, 20, vec![1.0, 0.5]);
        assert!(matches!(detect(&img, &model), Err(Error::Validation(_))));
        // An upscale can rescue it.
        let model = identity_model(20, 20, vec![2.5]);
        assert!(detect(&img, &model).is_ok());
    }
}
