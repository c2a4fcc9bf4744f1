//! Frequency-domain detector evaluation.
//!
//! Scoring a template at every window of a feature tensor is a
//! multichannel cross-correlation. Summing the per-channel spectral
//! products and taking one inverse transform computes all window inner
//! products at once, exactly; window norms come from an integral image of
//! the squared-channel sums. A brute-force sliding-window implementation
//! with 64-bit accumulation serves as the reference semantics.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};

use crate::image::Image;
use crate::scalar::Real;
use crate::tensor::{BoundingBox, IntegralImage, Tensor3};
use crate::{Error, Result};

/// Window norms below this are treated as flat: such windows carry no
/// signal, their cosine is undefined, and the position is marked invalid.
const NORM_FLOOR: f64 = 1e-10;

/// Dense plane of decision values over a target extent at one scale.
///
/// `scores[r·n + c]` is the decision value of the window whose top-left
/// corner sits at `(r, c)`. Positions where the window does not fit hold
/// `-∞`; positions with degenerate (flat) windows hold the bias but are
/// flagged invalid so selection steps skip them.
#[derive(Debug, Clone)]
pub struct ScoreMap<T> {
    m: usize,
    n: usize,
    valid_h: usize,
    valid_w: usize,
    pub scores: Vec<T>,
    pub valid: Vec<bool>,
    pub scale: f64,
}

impl<T: Real> ScoreMap<T> {
    /// Full plane extent (the target's extent).
    pub fn extent(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Rectangle of positions where the detector window fits.
    pub fn valid_region(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.valid_w as u32, self.valid_h as u32)
    }

    #[inline]
    pub fn score(&self, r: usize, c: usize) -> T {
        self.scores[r * self.n + c]
    }

    #[inline]
    pub fn is_valid(&self, r: usize, c: usize) -> bool {
        self.valid[r * self.n + c]
    }

    /// Highest-scoring valid position, if any.
    pub fn max_position(&self) -> Option<(usize, usize, T)> {
        let mut best: Option<(usize, usize, T)> = None;
        for r in 0..self.valid_h {
            for c in 0..self.valid_w {
                if !self.is_valid(r, c) {
                    continue;
                }
                let s = self.score(r, c);
                if best.map_or(true, |(_, _, b)| s > b) {
                    best = Some((r, c, s));
                }
            }
        }
        best
    }

    /// Debug visualization: valid scores affine-mapped to 0–255, the rest
    /// black.
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

/// A detector template transformed once per target extent: conjugated
/// per-channel spectra plus the cached FFT plans.
pub struct PreparedDetector<T: FftNum> {
    det_m: usize,
    det_n: usize,
    d: usize,
    target_m: usize,
    target_n: usize,
    bias: T,
    spectra: Vec<Vec<Complex<T>>>,
    fwd_rows: Arc<dyn Fft<T>>,
    fwd_cols: Arc<dyn Fft<T>>,
    inv_rows: Arc<dyn Fft<T>>,
    inv_cols: Arc<dyn Fft<T>>,
}

impl<T: Real + FftNum> PreparedDetector<T> {
    pub fn detector_shape(&self) -> (usize, usize, usize) {
        (self.det_m, self.det_n, self.d)
    }

    pub fn target_extent(&self) -> (usize, usize) {
        (self.target_m, self.target_n)
    }

    pub fn bias(&self) -> T {
        self.bias
    }

    /// Raw spectra bytes, for determinism checks.
    pub fn spectra(&self) -> &[Vec<Complex<T>>] {
        &self.spectra
    }
}

/// Transform the template's channels, zero-padded to the target extent
/// and conjugated, ready for repeated scoring at that extent.
pub fn prepare<T: Real + FftNum>(
    template: &Tensor3<T>,
    bias: T,
    target: (usize, usize),
) -> Result<PreparedDetector<T>> {
    let (det_m, det_n, d) = template.shape();
    let (target_m, target_n) = target;
    if det_m > target_m || det_n > target_n {
        return Err(Error::Validation(format!(
            "detector {det_m}x{det_n} exceeds target {target_m}x{target_n}"
        )));
    }
    let mut planner = FftPlanner::new();
    let fwd_rows = planner.plan_fft_forward(target_n);
    let fwd_cols = planner.plan_fft_forward(target_m);
    let inv_rows = planner.plan_fft_inverse(target_n);
    let inv_cols = planner.plan_fft_inverse(target_m);

    let spectra = (0..d)
        .map(|ch| {
            let mut buf = vec![Complex::new(T::zero(), T::zero()); target_m * target_n];
            for r in 0..det_m {
                for c in 0..det_n {
                    buf[r * target_n + c].re = template.get(r, c, ch);
                }
            }
            fft2d(&mut buf, target_m, target_n, &fwd_rows, &fwd_cols);
            for v in &mut buf {
                *v = v.conj();
            }
            buf
        })
        .collect();

    Ok(PreparedDetector {
        det_m,
        det_n,
        d,
        target_m,
        target_n,
        bias,
        spectra,
        fwd_rows,
        fwd_cols,
        inv_rows,
        inv_cols,
    })
}

/// In-place 2D FFT: row transforms, then column transforms via transpose.
fn fft2d<T: FftNum>(
    buf: &mut Vec<Complex<T>>,
    m: usize,
    n: usize,
    rows: &Arc<dyn Fft<T>>,
    cols: &Arc<dyn Fft<T>>,
) {
    rows.process(buf);
    let mut t = transpose(buf, m, n);
    cols.process(&mut t);
    *buf = transpose(&t, n, m);
}

fn transpose<T: FftNum>(buf: &[Complex<T>], m: usize, n: usize) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); buf.len()];
    for r in 0..m {
        for c in 0..n {
            out[c * m + r] = buf[r * n + c];
        }
    }
    out
}

/// Score every window position of `f` against the prepared detector:
/// summed per-channel spectral products, one inverse transform, then
/// normalization by integral-image window norms and the bias.
pub fn score_map<T: Real + FftNum>(
    f: &Tensor3<T>,
    det: &PreparedDetector<T>,
    scale: f64,
) -> Result<ScoreMap<T>> {
    let (m, n, d) = f.shape();
    if d != det.d {
        return Err(Error::ShapeMismatch(format!(
            "feature tensor has {d} channels, detector {}",
            det.d
        )));
    }
    if (m, n) != (det.target_m, det.target_n) {
        return Err(Error::ShapeMismatch(format!(
            "feature extent {m}x{n}, detector prepared for {}x{}",
            det.target_m, det.target_n
        )));
    }

    // Channel spectra in parallel, summed in channel order.
    let products: Vec<Vec<Complex<T>>> = (0..d)
        .into_par_iter()
        .map(|ch| {
            let mut buf: Vec<Complex<T>> = (0..m * n)
                .map(|i| Complex::new(f.data()[i * d + ch], T::zero()))
                .collect();
            fft2d(&mut buf, m, n, &det.fwd_rows, &det.fwd_cols);
            for (v, w) in buf.iter_mut().zip(&det.spectra[ch]) {
                *v *= *w;
            }
            buf
        })
        .collect();
    let mut acc = vec![Complex::new(T::zero(), T::zero()); m * n];
    for p in &products {
        for (a, &v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    fft2d(&mut acc, m, n, &det.inv_rows, &det.inv_cols);
    let inv_mn = T::one() / T::of((m * n) as f64);

    finalize_scores(f, det, scale, |r, c| acc[r * n + c].re * inv_mn)
}

/// Reference semantics: direct sliding-window evaluation with 64-bit
/// accumulation regardless of the working precision.
pub fn naive_slide<T: Real + FftNum>(
    f: &Tensor3<T>,
    template: &Tensor3<T>,
    bias: T,
    scale: f64,
) -> Result<ScoreMap<T>> {
    let det = NaiveDetector { template, bias };
    det.slide(f, scale)
}

struct NaiveDetector<'a, T> {
    template: &'a Tensor3<T>,
    bias: T,
}

impl<T: Real + FftNum> NaiveDetector<'_, T> {
    fn slide(&self, f: &Tensor3<T>, scale: f64) -> Result<ScoreMap<T>> {
        let (m, n, d) = f.shape();
        let (det_m, det_n, det_d) = self.template.shape();
        if d != det_d {
            return Err(Error::ShapeMismatch(format!(
                "feature tensor has {d} channels, detector {det_d}"
            )));
        }
        if det_m > m || det_n > n {
            return Err(Error::Validation(format!(
                "detector {det_m}x{det_n} exceeds target {m}x{n}"
            )));
        }
        let valid_h = m - det_m + 1;
        let valid_w = n - det_n + 1;
        let bias = self.bias.to_f64_lossy();

        let mut scores = vec![T::neg_infinity(); m * n];
        let mut valid = vec![false; m * n];
        let rows: Vec<Vec<(T, bool)>> = (0..valid_h)
            .into_par_iter()
            .map(|r| {
                (0..valid_w)
                    .map(|c| {
                        let mut dot = 0.0f64;
                        let mut sq = 0.0f64;
                        for wr in 0..det_m {
                            for wc in 0..det_n {
                                for k in 0..d {
                                    let fv = f.get(r + wr, c + wc, k).to_f64_lossy();
                                    let wv =
                                        self.template.get(wr, wc, k).to_f64_lossy();
                                    dot += fv * wv;
                                    sq += fv * fv;
                                }
                            }
                        }
                        let norm = sq.sqrt();
                        if norm < NORM_FLOOR {
                            (T::of(bias), false)
                        } else {
                            (T::of(dot / norm + bias), true)
                        }
                    })
                    .collect()
            })
            .collect();
        for (r, row) in rows.into_iter().enumerate() {
            for (c, (s, ok)) in row.into_iter().enumerate() {
                scores[r * n + c] = s;
                valid[r * n + c] = ok;
            }
        }
        Ok(ScoreMap { m, n, valid_h, valid_w, scores, valid, scale })
    }
}

/// Shared tail of both paths: window norms from the integral image of the
/// squared-channel sums, the flat-window policy, and the bias.
///
/// Integral-image differencing cancels catastrophically on windows whose
/// true mass is near zero (residues of order `ε · total`), which would
/// misclassify flat windows. Sums below a relative trigger are therefore
/// recomputed directly, in the same accumulation order the brute-force
/// path uses, so the two paths agree on validity.
fn finalize_scores<T: Real + FftNum>(
    f: &Tensor3<T>,
    det: &PreparedDetector<T>,
    scale: f64,
    correlation: impl Fn(usize, usize) -> T,
) -> Result<ScoreMap<T>> {
    let (m, n, _) = f.shape();
    let valid_h = m - det.det_m + 1;
    let valid_w = n - det.det_n + 1;
    let sq = f.channel_sq_sum();
    let ii = IntegralImage::build(m, n, &sq);
    let trigger = sum_trigger(&sq);
    let floor = T::of(NORM_FLOOR);

    let mut scores = vec![T::neg_infinity(); m * n];
    let mut valid = vec![false; m * n];
    for r in 0..valid_h {
        for c in 0..valid_w {
            let window =
                BoundingBox::new(c as i64, r as i64, det.det_n as u32, det.det_m as u32);
            let mut sum = ii.window_sum(&window)?;
            if sum < trigger {
                sum = direct_window_sq(f, r, c, det.det_m, det.det_n);
            }
            let norm = sum.max(T::zero()).sqrt();
            let idx = r * n + c;
            if norm < floor {
                scores[idx] = det.bias;
            } else {
                scores[idx] = correlation(r, c) / norm + det.bias;
                valid[idx] = true;
            }
        }
    }
    Ok(ScoreMap { m, n, valid_h, valid_w, scores, valid, scale })
}

/// Threshold below which an integral-image window sum is dominated by
/// cancellation noise and must be recomputed directly.
fn sum_trigger<T: Real>(sq: &[T]) -> T {
    let total: T = sq.iter().copied().sum();
    (total * T::of(1e-10)).max(T::of(NORM_FLOOR * NORM_FLOOR))
}

/// Direct squared Frobenius mass of one window, accumulated in f64 in the
/// same element order as the brute-force path.
fn direct_window_sq<T: Real>(f: &Tensor3<T>, r: usize, c: usize, h: usize, w: usize) -> T {
    let d = f.d();
    let mut sq = 0.0f64;
    for wr in 0..h {
        for wc in 0..w {
            for k in 0..d {
                let v = f.get(r + wr, c + wc, k).to_f64_lossy();
                sq += v * v;
            }
        }
    }
    T::of(sq)
}

/// Integral-image window norms on their own, for equivalence testing.
pub fn window_norms<T: Real>(f: &Tensor3<T>, det_m: usize, det_n: usize) -> Result<Vec<T>> {
    let (m, n, _) = f.shape();
    if det_m > m || det_n > n {
        return Err(Error::Validation("window exceeds tensor extent".into()));
    }
    let sq = f.channel_sq_sum();
    let ii = IntegralImage::build(m, n, &sq);
    let trigger = sum_trigger(&sq);
    let mut out = Vec::with_capacity((m - det_m + 1) * (n - det_n + 1));
    for r in 0..=m - det_m {
        for c in 0..=n - det_n {
            let window = BoundingBox::new(c as i64, r as i64, det_n as u32, det_m as u32);
            let mut sum = ii.window_sum(&window)?;
            if sum < trigger {
                sum = direct_window_sq(f, r, c, det_m, det_n);
            }
            out.push(sum.max(T::zero()).sqrt());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, m: usize, n: usize, d: usize) -> Tensor3<f64> {
        Tensor3::from_vec(m, n, d, (0..m * n * d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    fn max_score_diff(a: &ScoreMap<f64>, b: &ScoreMap<f64>) -> f64 {
        assert_eq!(a.extent(), b.extent());
        assert_eq!(a.valid, b.valid);
        let mut worst = 0.0f64;
        for i in 0..a.scores.len() {
            if a.valid[i] {
                worst = worst.max((a.scores[i] - b.scores[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn fft_matches_naive_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for case in 0..12 {
            let d = [1usize, 3, 5][case % 3];
            let m = rng.gen_range(12..48);
            let n = rng.gen_range(12..48);
            let dm = rng.gen_range(3..=m.min(20));
            let dn = rng.gen_range(3..=n.min(12));
            let f = random_tensor(&mut rng, m, n, d);
            let w = random_tensor(&mut rng, dm, dn, d);
            let bias = rng.gen_range(-0.5..0.5);

            let det = prepare(&w, bias, (m, n)).unwrap();
            let fast = score_map(&f, &det, 1.0).unwrap();
            let slow = naive_slide(&f, &w, bias, 1.0).unwrap();
            let diff = max_score_diff(&fast, &slow);
            assert!(diff <= 1e-6, "case {case} ({m}x{n}x{d}, det {dm}x{dn}): diff {diff}");
        }
    }

    #[test]
    fn planted_template_peaks_at_the_plant() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let w = random_tensor(&mut rng, 6, 4, 3);
        let wnorm = w.frobenius_norm();
        let bias = -0.25;
        let (m, n) = (32, 40);
        let (pr, pc) = (11, 17);
        let mut f = Tensor3::zeros(m, n, 3);
        for r in 0..6 {
            for c in 0..4 {
                for k in 0..3 {
                    f.set(pr + r, pc + c, k, w.get(r, c, k) / wnorm);
                }
            }
        }
        let det = prepare(&w, bias, (m, n)).unwrap();
        let map = score_map(&f, &det, 1.0).unwrap();
        let (br, bc, best) = map.max_position().unwrap();
        assert_eq!((br, bc), (pr, pc));
        assert!((best - (wnorm + bias)).abs() < 1e-9, "peak {best} vs {}", wnorm + bias);
        // And the naive oracle agrees on the whole plane.
        let slow = naive_slide(&f, &w, bias, 1.0).unwrap();
        assert!(max_score_diff(&map, &slow) <= 1e-6);
    }

    #[test]
    fn zero_target_is_fully_invalid() {
        let w = Tensor3::from_vec(2, 2, 1, vec![1.0f64, -1.0, 0.5, 0.25]).unwrap();
        let f = Tensor3::<f64>::zeros(8, 8, 1);
        let det = prepare(&w, 0.125, (8, 8)).unwrap();
        let map = score_map(&f, &det, 1.0).unwrap();
        assert!(map.max_position().is_none());
        for r in 0..7 {
            for c in 0..7 {
                assert!(!map.is_valid(r, c));
                assert_eq!(map.score(r, c), 0.125, "flat windows carry the bias");
            }
        }
        // Outside the valid region the sentinel blocks selection.
        assert_eq!(map.score(7, 7), f64::NEG_INFINITY);
    }

    #[test]
    fn single_position_reduces_to_plain_decision() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let w = random_tensor(&mut rng, 5, 7, 2);
        let f = random_tensor(&mut rng, 5, 7, 2);
        let det = prepare(&w, 0.5, (5, 7)).unwrap();
        let map = score_map(&f, &det, 1.0).unwrap();
        assert_eq!(map.valid_region().w, 1);
        assert_eq!(map.valid_region().h, 1);
        let expect: f64 = f
            .data()
            .iter()
            .zip(w.data())
            .map(|(&a, &b)| a * b)
            .sum::<f64>()
            / f.frobenius_norm()
            + 0.5;
        assert!((map.score(0, 0) - expect).abs() < 1e-9);
    }

    #[test]
    fn window_norms_match_direct_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let f = random_tensor(&mut rng, 24, 30, 4);
        let (dm, dn) = (7, 5);
        let fast = window_norms(&f, dm, dn).unwrap();
        let mut idx = 0;
        for r in 0..=24 - dm {
            for c in 0..=30 - dn {
                let mut sq = 0.0f64;
                for wr in 0..dm {
                    for wc in 0..dn {
                        for k in 0..4 {
                            let v = f.get(r + wr, c + wc, k);
                            sq += v * v;
                        }
                    }
                }
                let direct = sq.sqrt();
                let rel = (fast[idx] - direct).abs() / direct.max(1e-300);
                assert!(rel <= 1e-9, "({r},{c}): rel error {rel}");
                idx += 1;
            }
        }
    }

    #[test]
    fn scores_are_invariant_to_positive_feature_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let w = random_tensor(&mut rng, 4, 4, 2);
        let f = random_tensor(&mut rng, 16, 16, 2);
        let scaled =
            Tensor3::from_vec(16, 16, 2, f.data().iter().map(|&v| 37.5 * v).collect()).unwrap();
        let det = prepare(&w, 0.1, (16, 16)).unwrap();
        let a = score_map(&f, &det, 1.0).unwrap();
        let b = score_map(&scaled, &det, 1.0).unwrap();
        for i in 0..a.scores.len() {
            if a.valid[i] {
                assert!((a.scores[i] - b.scores[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn all_zero_template_transforms_to_zero() {
        let w = Tensor3::<f64>::zeros(3, 3, 2);
        let det = prepare(&w, 0.0, (10, 10)).unwrap();
        for ch in det.spectra() {
            assert!(ch.iter().all(|v| v.re == 0.0 && v.im == 0.0));
        }
    }

    #[test]
    fn re_prepare_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let w = random_tensor(&mut rng, 5, 3, 2);
        let a = prepare(&w, 0.0, (20, 24)).unwrap();
        let b = prepare(&w, 0.0, (20, 24)).unwrap();
        for (x, y) in a.spectra().iter().zip(b.spectra()) {
            for (p, q) in x.iter().zip(y) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
    }

    #[test]
    fn oversized_detector_is_rejected() {
        let w = Tensor3::<f64>::zeros(10, 10, 1);
        assert!(prepare(&w, 0.0, (8, 12)).is_err());
        let f = Tensor3::<f64>::zeros(8, 12, 2);
        let w2 = Tensor3::<f64>::zeros(3, 3, 1);
        let det = prepare(&w2, 0.0, (8, 12)).unwrap();
        assert!(matches!(score_map(&f, &det, 1.0), Err(Error::ShapeMismatch(_))));
    }
}
