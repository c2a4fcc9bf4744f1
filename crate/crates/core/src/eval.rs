//! Detection evaluation: greedy one-to-one matching against ground truth,
//! miss-rate / false-positives-per-image curves, a fixed-FPPI readout,
//! and round-robin cross-validation splits.

use crate::pyramid::Detection;
use crate::scalar::Real;
use crate::tensor::BoundingBox;
use crate::{Error, Result};

/// IoU at or above which a detection may claim a truth box.
pub const MATCH_IOU: f64 = 0.5;

/// One point of the trade-off curve, obtained by thresholding detections
/// at `threshold` (score ≥ threshold survives).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub fppi: f64,
    pub miss_rate: f64,
}

/// Sweep over all detection scores, highest threshold first.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub points: Vec<CurvePoint>,
    pub images: usize,
    pub truths: usize,
}

/// Match detections of one image against its truth boxes: walk detections
/// in descending score order (ties by input position) and let each claim
/// the still-unmatched truth with the highest IoU, provided it reaches
/// `iou_min`. Returns `(score, matched)` pairs in the walk order.
///
/// Because the walk is globally ordered by score, the outcome for each
/// detection is independent of any score threshold applied afterwards:
/// thresholding merely truncates the walk.
pub fn greedy_match<T: Real>(
    detections: &[Detection<T>],
    truths: &[BoundingBox],
    iou_min: f64,
) -> Vec<(T, bool)> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .partial_cmp(&detections[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut claimed = vec![false; truths.len()];
    let mut out = Vec::with_capacity(detections.len());
    for &i in &order {
        let det = &detections[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in truths.iter().enumerate() {
            if claimed[g] {
                continue;
            }
            let iou = det.bbox.iou(gt);
            if iou >= iou_min && best.map_or(true, |(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            claimed[g] = true;
            out.push((det.score, true));
        } else {
            out.push((det.score, false));
        }
    }
    out
}

/// Ignore rule for undersized truths: boxes shorter than `min_height`
/// leave the truth set (they cannot be missed), and detections that would
/// only land on an ignored box are dropped rather than counted as false
/// positives. Detections reaching a kept truth at `iou_min` stay.
pub fn apply_min_height<T: Real>(
    detections: Vec<Detection<T>>,
    truths: Vec<BoundingBox>,
    min_height: u32,
    iou_min: f64,
) -> (Vec<Detection<T>>, Vec<BoundingBox>) {
    let (kept, ignored): (Vec<BoundingBox>, Vec<BoundingBox>) =
        truths.into_iter().partition(|b| b.h >= min_height);
    let detections = detections
        .into_iter()
        .filter(|d| {
            kept.iter().any(|g| d.bbox.iou(g) >= iou_min)
                || !ignored.iter().any(|g| d.bbox.iou(g) >= iou_min)
        })
        .collect();
    (detections, kept)
}

/// Miss-rate / FPPI curve over a set of images. Every distinct detection
/// score becomes one threshold; points are emitted highest threshold
/// first, so FPPI is non-decreasing and miss rate non-increasing along
/// the vector.
pub fn curve<T: Real>(
    per_image: &[(Vec<Detection<T>>, Vec<BoundingBox>)],
    iou_min: f64,
) -> Result<EvalResult> {
    if per_image.is_empty() {
        return Err(Error::Validation("evaluation needs at least one image".into()));
    }
    let truths: usize = per_image.iter().map(|(_, g)| g.len()).sum();
    if truths == 0 {
        return Err(Error::Validation(
            "evaluation needs at least one truth box (miss rate undefined)".into(),
        ));
    }
    let images = per_image.len();

    let mut labelled: Vec<(f64, bool)> = per_image
        .iter()
        .flat_map(|(dets, gts)| greedy_match(dets, gts, iou_min))
        .map(|(s, tp)| (s.to_f64_lossy(), tp))
        .collect();
    labelled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < labelled.len() {
        let threshold = labelled[i].0;
        while i < labelled.len() && labelled[i].0 == threshold {
            if labelled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let fn_ = truths - tp;
        points.push(CurvePoint {
            threshold,
            fppi: fp as f64 / images as f64,
            miss_rate: fn_ as f64 / truths as f64,
        });
    }
    Ok(EvalResult { points, images, truths })
}

/// Miss rate at a reference FPPI.
///
/// If some point hits the target FPPI exactly, its miss rate is returned
/// (on ties, the lowest). Otherwise, when two neighbouring points with
/// positive FPPI straddle the target, the miss rate is interpolated
/// linearly in log-FPPI. Failing both — typically because the curve jumps
/// from FPPI 0 straight past the target — the point with the largest FPPI
/// not exceeding the target answers (last occurrence, i.e. the lowest
/// threshold); if even that is empty, the first point. An empty curve
/// misses everything: 1.0.
pub fn miss_at_fppi(points: &[CurvePoint], target: f64) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let exact: Vec<&CurvePoint> = points.iter().filter(|p| p.fppi == target).collect();
    if !exact.is_empty() {
        return exact.iter().map(|p| p.miss_rate).fold(f64::INFINITY, f64::min);
    }
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.fppi > 0.0 && a.fppi < target && target < b.fppi {
            let t = (target / a.fppi).ln() / (b.fppi / a.fppi).ln();
            return a.miss_rate + (b.miss_rate - a.miss_rate) * t;
        }
    }
    let mut best: Option<&CurvePoint> = None;
    for p in points {
        if p.fppi <= target && best.map_or(true, |b| p.fppi >= b.fppi) {
            best = Some(p);
        }
    }
    best.map_or(points[0].miss_rate, |p| p.miss_rate)
}

/// Round-robin k-fold assignment: fold `i` receives items `i`, `i+k`,
/// `i+2k`, … Folds partition `0..items`.
pub fn kfold(items: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Validation(format!("cross-validation needs k >= 2, got {k}")));
    }
    if k > items {
        return Err(Error::Validation(format!(
            "cannot split {items} items into {k} folds"
        )));
    }
    let mut folds = vec![Vec::new(); k];
    for i in 0..items {
        folds[i % k].push(i);
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: i64, y: i64, score: f64) -> Detection<f64> {
        Detection { bbox: BoundingBox::new(x, y, 10, 10), score, scale: 1.0 }
    }

    fn gt(x: i64, y: i64) -> BoundingBox {
        BoundingBox::new(x, y, 10, 10)
    }

    /// Three images, six truth boxes, eight detections whose scores
    /// enumerate every threshold; the whole sweep is hand-computed.
    fn fixture() -> Vec<(Vec<Detection<f64>>, Vec<BoundingBox>)> {
        vec![
            (
                vec![det(0, 0, 0.9), det(60, 0, 0.7), det(20, 0, 0.6)],
                vec![gt(0, 0), gt(20, 0), gt(40, 0)],
            ),
            (
                vec![det(0, 0, 0.8), det(60, 0, 0.5), det(20, 0, 0.2)],
                vec![gt(0, 0), gt(20, 0)],
            ),
            (vec![det(0, 0, 0.4), det(60, 0, 0.3)], vec![gt(0, 0)]),
        ]
    }

    #[test]
    fn curve_reproduces_the_hand_enumerated_sweep() {
        let result = curve(&fixture(), MATCH_IOU).unwrap();
        assert_eq!(result.images, 3);
        assert_eq!(result.truths, 6);
        let expect = [
            (0.9, 0.0, 5.0 / 6.0),
            (0.8, 0.0, 4.0 / 6.0),
            (0.7, 1.0 / 3.0, 4.0 / 6.0),
            (0.6, 1.0 / 3.0, 3.0 / 6.0),
            (0.5, 2.0 / 3.0, 3.0 / 6.0),
            (0.4, 2.0 / 3.0, 2.0 / 6.0),
            (0.3, 1.0, 2.0 / 6.0),
            (0.2, 1.0, 1.0 / 6.0),
        ];
        assert_eq!(result.points.len(), expect.len());
        for (p, &(t, fppi, miss)) in result.points.iter().zip(&expect) {
            assert_eq!(p.threshold, t);
            assert!((p.fppi - fppi).abs() < 1e-12, "threshold {t}: fppi {}", p.fppi);
            assert!((p.miss_rate - miss).abs() < 1e-12, "threshold {t}: miss {}", p.miss_rate);
        }
        // The reference readout lands on the fallback branch: the largest
        // FPPI not above 0.1 is 0, whose lowest-threshold point has miss 2/3.
        let readout = miss_at_fppi(&result.points, 0.1);
        assert!((readout - 2.0 / 3.0).abs() < 1e-12, "readout {readout}");
    }

    #[test]
    fn matching_is_one_to_one_and_score_ordered() {
        // Two detections on the same truth: only the higher one matches.
        let dets = vec![det(0, 0, 0.5), det(1, 0, 0.9)];
        let gts = vec![gt(0, 0)];
        let labels = greedy_match(&dets, &gts, MATCH_IOU);
        assert_eq!(labels, vec![(0.9, true), (0.5, false)]);

        // A detection prefers the truth with the larger overlap, leaving
        // the other truth available: at x=2 the IoU against the left truth
        // is 2/3 and against the right truth 1/4.
        let gts = vec![gt(0, 0), gt(8, 0)];
        let dets = vec![det(2, 0, 0.9), det(8, 0, 0.8)];
        let labels = greedy_match(&dets, &gts, MATCH_IOU);
        assert!(labels[0].1, "first claims the left truth");
        assert!(labels[1].1, "second claims the right truth exactly");
    }

    #[test]
    fn iou_threshold_is_inclusive() {
        // Boxes offset by 5 of 10: intersection 50, union 150, IoU 1/3.
        let dets = vec![det(5, 0, 0.9)];
        let gts = vec![gt(0, 0)];
        assert!(!greedy_match(&dets, &gts, MATCH_IOU)[0].1);
        assert!(greedy_match(&dets, &gts, 1.0 / 3.0)[0].1, "IoU exactly at the threshold counts");
    }

    #[test]
    fn log_interpolation_between_straddling_points() {
        let points = [
            CurvePoint { threshold: 0.9, fppi: 0.05, miss_rate: 0.8 },
            CurvePoint { threshold: 0.5, fppi: 0.2, miss_rate: 0.4 },
        ];
        // ln(0.1/0.05)/ln(0.2/0.05) = ln2/ln4 = 0.5.
        let miss = miss_at_fppi(&points, 0.1);
        assert!((miss - 0.6).abs() < 1e-12, "miss {miss}");
        // Exact hit returns the point itself.
        assert_eq!(miss_at_fppi(&points, 0.2), 0.4);
        // Target below the whole curve: first point answers.
        assert_eq!(miss_at_fppi(&points, 0.01), 0.8);
        // Target above the whole curve: largest not-exceeding point.
        assert_eq!(miss_at_fppi(&points, 5.0), 0.4);
        // No curve at all: everything is missed.
        assert_eq!(miss_at_fppi(&[], 0.1), 1.0);
    }

    #[test]
    fn curve_rejects_degenerate_inputs() {
        let empty: Vec<(Vec<Detection<f64>>, Vec<BoundingBox>)> = vec![];
        assert!(curve(&empty, MATCH_IOU).is_err());
        let no_truth = vec![(vec![det(0, 0, 0.9)], vec![])];
        assert!(curve(&no_truth, MATCH_IOU).is_err());
    }

    #[test]
    fn min_height_ignores_small_truths_without_penalizing_their_detections() {
        let truths = vec![BoundingBox::new(0, 0, 15, 30), BoundingBox::new(40, 0, 5, 10)];
        let detections = vec![
            Detection::<f64> { bbox: BoundingBox::new(0, 0, 15, 30), score: 0.9, scale: 1.0 },
            Detection::<f64> { bbox: BoundingBox::new(40, 0, 5, 10), score: 0.8, scale: 1.0 },
            Detection::<f64> { bbox: BoundingBox::new(100, 0, 15, 30), score: 0.7, scale: 1.0 },
        ];
        let (dets, kept) = apply_min_height(detections, truths, 20, MATCH_IOU);
        // The 10 px truth leaves; the detection sitting on it is dropped,
        // while the stray at x = 100 remains an honest false positive.
        assert_eq!(kept, vec![BoundingBox::new(0, 0, 15, 30)]);
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0].score, 0.9);
        assert_eq!(dets[1].score, 0.7);
        // Everything passes through untouched when no truth is undersized.
        let (all, kept) = apply_min_height(dets.clone(), kept.clone(), 20, MATCH_IOU);
        assert_eq!(all.len(), 2);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn kfold_is_a_round_robin_partition() {
        let folds = kfold(10, 3).unwrap();
        assert_eq!(folds, vec![vec![0, 3, 6, 9], vec![1, 4, 7], vec![2, 5, 8]]);
        let mut seen = vec![false; 10];
        for fold in &folds {
            for &i in fold {
                assert!(!seen[i], "index {i} assigned twice");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert!(kfold(5, 1).is_err());
        assert!(kfold(3, 4).is_err());
    }
}
