//! Training orchestration: crop extraction, decorrelation fit, the
//! two-round hard-negative-mining protocol, and cross-validated cost
//! selection.
//!
//! Positives are fixed-size feature windows: each image is resized so the
//! truth box height matches the detector height, features are computed on
//! the resized image, and the detector-shaped window centred on the truth
//! centre is cropped. Negatives are random windows at native scale that
//! barely overlap any truth box. The decorrelation basis is fitted to the
//! positive windows' raw descriptors and then shared by both rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftNum;

use crate::eval::kfold;
use crate::fft::{prepare, score_map};
use crate::image::AnnotatedFrame;
use crate::lsk::{dense_descriptors, LskParams};
use crate::mcs::NormalizedTensor;
use crate::model::Model;
use crate::pca::{fit_pca, project, PcaBasis};
use crate::pyramid::{fuse, local_maxima, peak_to_box, PyramidLevel};
use crate::scalar::Real;
use crate::svm::{solve_dual, SolverConfig, SvmSolution, TrainingSet};
use crate::tensor::{BoundingBox, Tensor3};
use crate::{Error, Result};

/// Decision score above which a window counts as a margin violator worth
/// mining.
pub const MINING_THRESHOLD: f64 = -1.0;

/// Maximum IoU a negative window may have with any truth box.
pub const NEGATIVE_IOU_MAX: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct TrainOptions<T> {
    pub lsk: LskParams<T>,
    /// Detector window extent (rows, cols).
    pub detector: (usize, usize),
    /// Spectrum energy fraction the decorrelation must strictly exceed.
    pub energy_target: T,
    pub solver: SolverConfig<T>,
    pub scales: Vec<f64>,
    pub negatives_per_image: usize,
    /// Mining budget as a multiple of the positive count.
    pub mining_budget_factor: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl<T: Real> TrainOptions<T> {
    pub fn new(detector: (usize, usize), scales: Vec<f64>) -> Self {
        TrainOptions {
            lsk: LskParams::default(),
            detector,
            energy_target: T::of(0.8),
            solver: SolverConfig::default(),
            scales,
            negatives_per_image: 10,
            mining_budget_factor: 2.0,
            threshold: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildStats {
    pub positives: usize,
    pub negatives: usize,
    /// Crops dropped for zero norm or geometry that does not fit.
    pub skipped: usize,
}

/// Raw (pre-projection) positive windows, one per usable truth box.
fn positive_windows<T: Real>(
    frames: &[AnnotatedFrame<T>],
    lsk: &LskParams<T>,
    det: (usize, usize),
) -> Result<(Vec<Tensor3<T>>, usize)> {
    let (det_m, det_n) = det;
    let jobs: Vec<(usize, BoundingBox)> = frames
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.truths.iter().map(move |&t| (i, t)))
        .collect();
    let crops: Vec<Option<Tensor3<T>>> = jobs
        .par_iter()
        .map(|&(i, truth)| {
            let img = &frames[i].image;
            let (h, w) = (img.height(), img.width());
            if truth.x < 0
                || truth.y < 0
                || truth.right() > w as i64
                || truth.bottom() > h as i64
            {
                return Ok(None);
            }
            let s = det_m as f64 / truth.h as f64;
            let lm = ((h as f64 * s).round() as usize).max(det_m);
            let ln = ((w as f64 * s).round() as usize).max(det_n);
            if lm < 3 || ln < 3 {
                return Ok(None);
            }
            let resized = img.resized(lm, ln);
            let feats = dense_descriptors(&resized, lsk)?;
            let cy = (truth.y as f64 + truth.h as f64 / 2.0) * lm as f64 / h as f64;
            let cx = (truth.x as f64 + truth.w as f64 / 2.0) * ln as f64 / w as f64;
            let top =
                ((cy - det_m as f64 / 2.0).round() as i64).clamp(0, (lm - det_m) as i64);
            let left =
                ((cx - det_n as f64 / 2.0).round() as i64).clamp(0, (ln - det_n) as i64);
            let window =
                feats.crop(&BoundingBox::new(left, top, det_n as u32, det_m as u32))?;
            Ok(Some(window))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut skipped = 0;
    for c in crops {
        match c {
            Some(w) => out.push(w),
            None => skipped += 1,
        }
    }
    Ok((out, skipped))
}

/// Assemble the round-one training set: positives from every truth box,
/// the decorrelation basis fitted to their raw descriptors, and random
/// low-overlap negatives from every frame.
pub fn build_training_set<T: Real>(
    frames: &[AnnotatedFrame<T>],
    opts: &TrainOptions<T>,
) -> Result<(TrainingSet<T>, PcaBasis<T>, BuildStats)> {
    opts.lsk.validate()?;
    let (det_m, det_n) = opts.detector;
    let (raw, mut skipped) = positive_windows(frames, &opts.lsk, opts.detector)?;
    if raw.is_empty() {
        return Err(Error::Validation("no usable positive examples".into()));
    }

    let l = opts.lsk.descriptor_len();
    let mut samples = Vec::with_capacity(raw.len() * det_m * det_n * l);
    for w in &raw {
        samples.extend_from_slice(w.data());
    }
    let basis = fit_pca(&samples, l, opts.energy_target)?;
    drop(samples);

    let mut set = TrainingSet::new((det_m, det_n, basis.d));
    let mut stats = BuildStats::default();
    for w in &raw {
        let projected = project(w, &basis)?;
        match NormalizedTensor::new(projected) {
            Ok(f) => {
                set.push(f, 1)?;
                stats.positives += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    drop(raw);

    // Native-scale negatives, deterministically seeded per frame so the
    // parallel feature pass cannot perturb the sampling stream.
    let projected_frames: Vec<Option<Tensor3<T>>> = frames
        .par_iter()
        .map(|f| {
            let (h, w) = (f.image.height(), f.image.width());
            if h < det_m || w < det_n {
                return Ok(None);
            }
            let feats = dense_descriptors(&f.image, &opts.lsk)?;
            Ok(Some(project(&feats, &basis)?))
        })
        .collect::<Result<_>>()?;
    for (i, (frame, feats)) in frames.iter().zip(&projected_frames).enumerate() {
        let Some(feats) = feats else {
            skipped += opts.negatives_per_image;
            continue;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let (m, n, _) = feats.shape();
        let mut taken = 0;
        let mut attempts = 0;
        while taken < opts.negatives_per_image && attempts < opts.negatives_per_image * 40 {
            attempts += 1;
            let y = rng.gen_range(0..=(m - det_m)) as i64;
            let x = rng.gen_range(0..=(n - det_n)) as i64;
            let b = BoundingBox::new(x, y, det_n as u32, det_m as u32);
            if frame.truths.iter().any(|t| t.iou(&b) >= NEGATIVE_IOU_MAX) {
                continue;
            }
            let window = feats.crop(&b)?;
            match NormalizedTensor::new(window) {
                Ok(f) => {
                    set.push(f, -1)?;
                    stats.negatives += 1;
                    taken += 1;
                }
                Err(_) => skipped += 1,
            }
        }
    }
    stats.skipped = skipped;
    set.validate()?;
    Ok((set, basis, stats))
}

struct MinedCandidate<T> {
    score: T,
    window: Tensor3<T>,
}

/// Run the detector over annotated frames and harvest the highest-scoring
/// windows that do not overlap any truth box: margin violators the next
/// training round should see. Returns up to `budget` normalized windows,
/// best first.
pub fn hard_negative_mine<T: Real + FftNum>(
    model: &Model<T>,
    frames: &[AnnotatedFrame<T>],
    budget: usize,
) -> Result<Vec<NormalizedTensor<T>>> {
    let (det_m, det_n, _) = model.detector_shape();
    let threshold = T::of(MINING_THRESHOLD);

    let per_frame: Vec<Vec<MinedCandidate<T>>> = frames
        .par_iter()
        .map(|frame| {
            let (h, w) = (frame.image.height(), frame.image.width());
            let mut cands: Vec<(T, f64, BoundingBox, Tensor3<T>)> = Vec::new();
            for &s in &model.scales {
                let lm = (h as f64 * s).round() as usize;
                let ln = (w as f64 * s).round() as usize;
                if lm < det_m || ln < det_n || lm < 3 || ln < 3 {
                    continue;
                }
                let resized = frame.image.resized(lm, ln);
                let feats = model.features(&resized)?;
                let det = prepare(&model.template, model.bias, (lm, ln))?;
                let map = score_map(&feats, &det, s)?;
                let level = fuse(&[PyramidLevel { scale: s, map }])?;
                for (r, c, score, _) in local_maxima(&level) {
                    if score < threshold {
                        continue;
                    }
                    let orig =
                        peak_to_box((r, c), (lm, ln), (h, w), (det_m, det_n), s);
                    if frame.truths.iter().any(|t| t.iou(&orig) >= NEGATIVE_IOU_MAX) {
                        continue;
                    }
                    let window = feats.crop(&BoundingBox::new(
                        c as i64,
                        r as i64,
                        det_n as u32,
                        det_m as u32,
                    ))?;
                    cands.push((score, s, orig, window));
                }
            }
            // Per-frame greedy suppression on original-image boxes.
            cands.sort_by(|a, b| {
                b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut kept: Vec<(T, f64, BoundingBox, Tensor3<T>)> = Vec::new();
            for cand in cands {
                if kept.iter().all(|k| k.2.iou(&cand.2) <= 0.5) {
                    kept.push(cand);
                }
            }
            Ok(kept
                .into_iter()
                .map(|(score, _, _, window)| MinedCandidate { score, window })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut all: Vec<MinedCandidate<T>> = per_frame.into_iter().flatten().collect();
    all.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    all.truncate(budget);
    Ok(all
        .into_iter()
        .filter_map(|c| NormalizedTensor::new(c.window).ok())
        .collect())
}

#[derive(Debug, Clone)]
pub struct TrainRound<T> {
    pub model: Model<T>,
    pub solution: SvmSolution<T>,
    pub examples: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub initial: TrainRound<T>,
    pub refined: TrainRound<T>,
    pub stats: BuildStats,
    pub mined: usize,
}

/// The full two-round protocol: train on random negatives, mine hard
/// negatives with that model, retrain on the enlarged set. Both rounds
/// share the decorrelation basis so their templates live in one space.
pub fn train_two_round<T: Real + FftNum>(
    frames: &[AnnotatedFrame<T>],
    opts: &TrainOptions<T>,
) -> Result<TrainOutcome<T>> {
    let (set, basis, stats) = build_training_set(frames, opts)?;
    train_rounds(set, basis, stats, frames, opts)
}

/// Both training rounds over an already-built set, for callers that need
/// the set first (e.g. to cross-validate the cost parameter on it).
pub fn train_rounds<T: Real + FftNum>(
    mut set: TrainingSet<T>,
    basis: PcaBasis<T>,
    stats: BuildStats,
    frames: &[AnnotatedFrame<T>],
    opts: &TrainOptions<T>,
) -> Result<TrainOutcome<T>> {
    let stm = crate::svm::train(&set, &opts.solver)?;
    let initial = TrainRound {
        model: Model::new(
            opts.lsk,
            basis.clone(),
            stm.template,
            stm.bias,
            opts.scales.clone(),
            opts.threshold,
        )?,
        examples: set.len(),
        solution: stm.solution,
    };

    let budget = (stats.positives as f64 * opts.mining_budget_factor).ceil() as usize;
    let mined = hard_negative_mine(&initial.model, frames, budget)?;
    let mined_count = mined.len();
    for window in mined {
        set.push(window, -1)?;
    }

    let stm = crate::svm::train(&set, &opts.solver)?;
    let refined = TrainRound {
        model: Model::new(
            opts.lsk,
            basis,
            stm.template,
            stm.bias,
            opts.scales.clone(),
            opts.threshold,
        )?,
        examples: set.len(),
        solution: stm.solution,
    };

    Ok(TrainOutcome { initial, refined, stats, mined: mined_count })
}

/// Result of the cross-validated grid search over the cost parameter.
#[derive(Debug, Clone)]
pub struct CostSelection<T> {
    pub cost: T,
    /// `(cost, correct, total)` per grid entry.
    pub grid: Vec<(T, usize, usize)>,
    pub folds: Vec<Vec<usize>>,
}

/// k-fold grid search: train on the out-of-fold examples, count correct
/// sign predictions on the fold. The grid must be sorted ascending; ties
/// resolve to the smaller cost.
pub fn select_cost<T: Real>(
    data: &TrainingSet<T>,
    grid: &[T],
    k: usize,
    base: &SolverConfig<T>,
) -> Result<CostSelection<T>> {
    if grid.is_empty() {
        return Err(Error::Validation("empty cost grid".into()));
    }
    data.validate()?;
    let n = data.len();
    let gram = data.gram();
    let folds = kfold(n, k)?;

    let mut report = Vec::new();
    let mut best: Option<(usize, T)> = None;
    for &c in grid {
        let cfg = SolverConfig { c, ..*base };
        let mut correct = 0;
        for fold in &folds {
            let in_fold = |i: usize| fold.binary_search(&i).is_ok();
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_fold(i)).collect();
            let labels: Vec<i8> =
                train_idx.iter().map(|&i| data.labels()[i]).collect();
            let mut sub = Vec::with_capacity(train_idx.len() * train_idx.len());
            for &a in &train_idx {
                for &b in &train_idx {
                    sub.push(gram[a * n + b]);
                }
            }
            let sol = solve_dual(&sub, &labels, &cfg, false)?;
            for &v in fold {
                let mut f = sol.bias;
                for (j, &t) in train_idx.iter().enumerate() {
                    if sol.beta[j] != T::zero() {
                        f += sol.beta[j]
                            * T::of(f64::from(labels[j]))
                            * gram[v * n + t];
                    }
                }
                let predicted = if f >= T::zero() { 1 } else { -1 };
                if predicted == data.labels()[v] {
                    correct += 1;
                }
            }
        }
        report.push((c, correct, n));
        if best.map_or(true, |(bc, _)| correct > bc) {
            best = Some((correct, c));
        }
    }
    Ok(CostSelection { cost: best.unwrap().1, grid: report, folds })
}
