//! Max-margin tensor classifier: hinge-loss SVM solved in the dual over
//! the cosine-similarity Gram, by sequential minimal optimization with
//! maximal-violating-pair selection.
//!
//! Because the kernel is an inner product of unit-normalized tensors, the
//! learned classifier collapses back into a single template tensor (the
//! signed, weighted sum of the support examples) plus a bias, which is
//! what makes frequency-domain evaluation possible downstream.

use rayon::prelude::*;

use crate::mcs::NormalizedTensor;
use crate::scalar::Real;
use crate::tensor::Tensor3;
use crate::{Error, Result};

/// Labeled, same-shaped, unit-normalized training examples, stored
/// flattened for fast inner products.
#[derive(Debug, Clone)]
pub struct TrainingSet<T> {
    shape: (usize, usize, usize),
    features: Vec<T>,
    labels: Vec<i8>,
}

impl<T: Real> TrainingSet<T> {
    pub fn new(shape: (usize, usize, usize)) -> Self {
        TrainingSet { shape, features: Vec::new(), labels: Vec::new() }
    }

    pub fn push(&mut self, example: NormalizedTensor<T>, label: i8) -> Result<()> {
        if example.shape() != self.shape {
            return Err(Error::ShapeMismatch(format!(
                "example shape {:?}, set holds {:?}",
                example.shape(),
                self.shape
            )));
        }
        if label != 1 && label != -1 {
            return Err(Error::Validation(format!("label must be +1 or -1, got {label}")));
        }
        self.features.extend_from_slice(example.tensor().data());
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1 * self.shape.2
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn feature(&self, i: usize) -> &[T] {
        let dim = self.dim();
        &self.features[i * dim..(i + 1) * dim]
    }

    pub fn validate(&self) -> Result<()> {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == self.labels.len() {
            return Err(Error::Validation(
                "training set needs at least one example of each class".into(),
            ));
        }
        Ok(())
    }

    /// Restrict to a subset of example indices (used by cross-validation).
    pub fn subset(&self, indices: &[usize]) -> TrainingSet<T> {
        let dim = self.dim();
        let mut out = TrainingSet::new(self.shape);
        for &i in indices {
            out.features.extend_from_slice(&self.features[i * dim..(i + 1) * dim]);
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Full kernel matrix. Examples are unit-norm, so plain inner products
    /// are exactly the cosine similarities.
    pub fn gram(&self) -> Vec<T> {
        let k = self.len();
        let rows: Vec<Vec<T>> = (0..k)
            .into_par_iter()
            .map(|i| {
                let fi = self.feature(i);
                (i..k)
                    .map(|j| {
                        fi.iter()
                            .zip(self.feature(j))
                            .map(|(&a, &b)| a * b)
                            .sum::<T>()
                            .min(T::one())
                            .max(-T::one())
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![T::zero(); k * k];
        for (i, row) in rows.iter().enumerate() {
            for (off, &v) in row.iter().enumerate() {
                let j = i + off;
                out[i * k + j] = v;
                out[j * k + i] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig<T> {
    /// Box constraint: tradeoff between margin and hinge violations.
    pub c: T,
    /// Stop when the maximal KKT violating pair's gap falls below this.
    pub tolerance: T,
    /// Hard cap on pair updates.
    pub max_passes: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig { c: T::one(), tolerance: T::of(1e-6), max_passes: 2_000_000 }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero()) || !(self.tolerance > T::zero()) || self.max_passes == 0 {
            return Err(Error::Validation(
                "solver needs c > 0, tolerance > 0, max_passes > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Result of the dual optimization.
#[derive(Debug, Clone)]
pub struct SvmSolution<T> {
    pub beta: Vec<T>,
    pub bias: T,
    /// Indices with nonzero dual coefficient.
    pub support: Vec<usize>,
    pub iterations: usize,
    /// Violating-pair gap at the final iteration.
    pub final_gap: T,
    /// Dual objective Σβ − ½βᵀQβ, recomputed from the final coefficients.
    pub objective: T,
    /// Per-iteration dual objective, recorded only when tracing.
    pub objective_trace: Vec<T>,
}

/// Maximize `Σβ − ½βᵀQβ` over `0 ≤ β ≤ C`, `yᵀβ = 0`, where
/// `Q_ij = y_i y_j K_ij`. One iteration updates the maximal violating
/// pair exactly (two-variable subproblem in closed form).
pub fn solve_dual<T: Real>(
    gram: &[T],
    labels: &[i8],
    cfg: &SolverConfig<T>,
    trace: bool,
) -> Result<SvmSolution<T>> {
    cfg.validate()?;
    let n = labels.len();
    if gram.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "gram holds {} entries for {n} examples",
            gram.len()
        )));
    }
    if !gram.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("gram matrix has non-finite entries".into()));
    }
    if !(labels.iter().any(|&l| l == 1) && labels.iter().any(|&l| l == -1)) {
        return Err(Error::Validation("both classes are required".into()));
    }

    let y: Vec<T> = labels.iter().map(|&l| T::of(f64::from(l))).collect();
    let c = cfg.c;
    let k = |i: usize, j: usize| gram[i * n + j];

    let mut beta = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let mut objective_trace = Vec::new();
    let mut iterations = 0;
    let mut gap;

    loop {
        // Maximal violating pair over the feasible ascent directions.
        let mut up_val = T::neg_infinity();
        let mut up_idx = usize::MAX;
        let mut low_val = T::infinity();
        let mut low_idx = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let positive = y[t] > T::zero();
            if (positive && beta[t] < c) || (!positive && beta[t] > T::zero()) {
                if v > up_val {
                    up_val = v;
                    up_idx = t;
                }
            }
            if (positive && beta[t] > T::zero()) || (!positive && beta[t] < c) {
                if v < low_val {
                    low_val = v;
                    low_idx = t;
                }
            }
        }
        gap = up_val - low_val;
        if gap <= cfg.tolerance || up_idx == usize::MAX || low_idx == usize::MAX {
            break;
        }
        if iterations >= cfg.max_passes {
            return Err(Error::Numerical(format!(
                "solver did not converge: gap {gap} after {iterations} updates (tolerance {})",
                cfg.tolerance
            )));
        }
        iterations += 1;

        let (i, j) = (up_idx, low_idx);
        let old_i = beta[i];
        let old_j = beta[j];
        // Curvature along the feasible pair direction; identical for both
        // label configurations once the labels are folded out of Q.
        let mut quad = k(i, i) + k(j, j) - T::of(2.0) * k(i, j);
        if quad <= T::zero() {
            quad = T::of(1e-12);
        }

        if labels[i] != labels[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > T::zero() {
                if beta[j] < T::zero() {
                    beta[j] = T::zero();
                    beta[i] = diff;
                }
            } else if beta[i] < T::zero() {
                beta[i] = T::zero();
                beta[j] = -diff;
            }
            if diff > T::zero() {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < T::zero() {
                beta[j] = T::zero();
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < T::zero() {
                beta[i] = T::zero();
                beta[j] = sum;
            }
        }

        let di = beta[i] - old_i;
        let dj = beta[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * y[i] * k(t, i) * di + y[t] * y[j] * k(t, j) * dj;
        }
        if trace {
            // D(β) = ½ Σ βₜ(1 − Gₜ), using the maintained gradient.
            let obj: T = (0..n).map(|t| beta[t] * (T::one() - grad[t])).sum::<T>() * T::of(0.5);
            objective_trace.push(obj);
        }
    }

    let bias = compute_bias(&beta, &grad, &y, c);
    let support: Vec<usize> = (0..n).filter(|&i| beta[i] > T::zero()).collect();
    let objective = dual_objective(gram, labels, &beta);

    Ok(SvmSolution { beta, bias, support, iterations, final_gap: gap, objective, objective_trace })
}

/// The dual objective recomputed from scratch.
pub fn dual_objective<T: Real>(gram: &[T], labels: &[i8], beta: &[T]) -> T {
    let n = labels.len();
    let mut quad = T::zero();
    for i in 0..n {
        if beta[i] == T::zero() {
            continue;
        }
        let yi = T::of(f64::from(labels[i]));
        for j in 0..n {
            if beta[j] == T::zero() {
                continue;
            }
            let yj = T::of(f64::from(labels[j]));
            quad += beta[i] * beta[j] * yi * yj * gram[i * n + j];
        }
    }
    beta.iter().copied().sum::<T>() - quad * T::of(0.5)
}

fn compute_bias<T: Real>(beta: &[T], grad: &[T], y: &[T], c: T) -> T {
    // Free support vectors pin the bias exactly; average them. With none,
    // take the midpoint of the feasible interval.
    let mut sum_free = T::zero();
    let mut n_free = 0usize;
    let mut upper = T::infinity();
    let mut lower = T::neg_infinity();
    for i in 0..beta.len() {
        let v = -y[i] * grad[i];
        if beta[i] > T::zero() && beta[i] < c {
            sum_free += v;
            n_free += 1;
        } else {
            let at_upper = beta[i] >= c;
            let positive = y[i] > T::zero();
            // Bound examples constrain the bias from one side only:
            // zero-coefficient positives and saturated negatives need
            // b ≥ v, the mirror cases need b ≤ v.
            if (positive && !at_upper) || (!positive && at_upper) {
                lower = lower.max(v);
            } else {
                upper = upper.min(v);
            }
        }
    }
    if n_free > 0 {
        sum_free / T::of(n_free as f64)
    } else if upper.is_finite() && lower.is_finite() {
        (upper + lower) * T::of(0.5)
    } else if upper.is_finite() {
        upper
    } else if lower.is_finite() {
        lower
    } else {
        T::zero()
    }
}

/// Largest KKT violation of the dual solution against the decision
/// function it induces: zero-coefficient examples must clear the margin,
/// bound ones must violate it, free ones must sit on it.
pub fn kkt_max_violation<T: Real>(
    gram: &[T],
    labels: &[i8],
    beta: &[T],
    bias: T,
    c: T,
) -> T {
    let n = labels.len();
    let edge = c * T::of(1e-10);
    let mut worst = T::zero();
    for i in 0..n {
        let f: T = (0..n)
            .map(|j| beta[j] * T::of(f64::from(labels[j])) * gram[i * n + j])
            .sum::<T>()
            + bias;
        let margin = T::of(f64::from(labels[i])) * f;
        let violation = if beta[i] <= edge {
            (T::one() - margin).max(T::zero())
        } else if beta[i] >= c - edge {
            (margin - T::one()).max(T::zero())
        } else {
            (margin - T::one()).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

/// Trained classifier in primal form.
#[derive(Debug, Clone)]
pub struct TrainedStm<T> {
    pub template: Tensor3<T>,
    pub bias: T,
    pub solution: SvmSolution<T>,
}

/// Solve the dual on the set's Gram and collapse the support examples
/// into the template tensor.
pub fn train<T: Real>(data: &TrainingSet<T>, cfg: &SolverConfig<T>) -> Result<TrainedStm<T>> {
    data.validate()?;
    let gram = data.gram();
    let solution = solve_dual(&gram, data.labels(), cfg, false)?;
    let template = template_from(data, &solution.beta)?;
    Ok(TrainedStm { template, bias: solution.bias, solution })
}

/// `W = Σ y_j β_j F_j` over the support examples.
pub fn template_from<T: Real>(data: &TrainingSet<T>, beta: &[T]) -> Result<Tensor3<T>> {
    if beta.len() != data.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients for {} examples",
            beta.len(),
            data.len()
        )));
    }
    let dim = data.dim();
    let mut w = vec![T::zero(); dim];
    for (idx, &b) in beta.iter().enumerate() {
        if b == T::zero() {
            continue;
        }
        let sign = T::of(f64::from(data.labels()[idx]));
        for (slot, &v) in w.iter_mut().zip(data.feature(idx)) {
            *slot += sign * b * v;
        }
    }
    let (m, n, d) = data.shape();
    Tensor3::from_vec(m, n, d, w)
}

/// Kernel-expansion form of the decision function, `Σ y_j β_j ⟨F_j, f⟩ + b`.
/// The primal template evaluation must agree with this to high precision.
pub fn dual_decision<T: Real>(
    data: &TrainingSet<T>,
    beta: &[T],
    bias: T,
    f: &NormalizedTensor<T>,
) -> T {
    let mut acc = bias;
    for (idx, &b) in beta.iter().enumerate() {
        if b == T::zero() {
            continue;
        }
        let dot: T = data
            .feature(idx)
            .iter()
            .zip(f.tensor().data())
            .map(|(&a, &x)| a * x)
            .sum();
        acc += T::of(f64::from(data.labels()[idx])) * b * dot;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_tensor(data: Vec<f64>, m: usize, n: usize, d: usize) -> NormalizedTensor<f64> {
        NormalizedTensor::new(Tensor3::from_vec(m, n, d, data).unwrap()).unwrap()
    }

    fn random_set(
        rng: &mut ChaCha8Rng,
        n_per_class: usize,
        dim: usize,
        separation: f64,
    ) -> TrainingSet<f64> {
        let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut set = TrainingSet::new((1, 1, dim));
        for sign in [1i8, -1] {
            for _ in 0..n_per_class {
                let data: Vec<f64> = center
                    .iter()
                    .map(|&c| f64::from(sign) * c * separation + rng.gen_range(-1.0..1.0))
                    .collect();
                set.push(unit_tensor(data, 1, 1, dim), sign).unwrap();
            }
        }
        set
    }

    #[test]
    fn antipodal_pair_solves_analytically() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let raw: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pos = unit_tensor(raw.clone(), 2, 2, 3);
        let neg = unit_tensor(raw.iter().map(|&v| -v).collect(), 2, 2, 3);
        let mut set = TrainingSet::new((2, 2, 3));
        set.push(pos.clone(), 1).unwrap();
        set.push(neg, -1).unwrap();

        let trained = train(&set, &SolverConfig { c: 10.0, ..Default::default() }).unwrap();
        let sol = &trained.solution;
        // Dual optimum is β = (1/2, 1/2), giving W = F₊ and b = 0.
        assert!((sol.beta[0] - 0.5).abs() < 1e-9);
        assert!((sol.beta[1] - 0.5).abs() < 1e-9);
        assert_eq!(sol.support, vec![0, 1]);
        assert!(sol.bias.abs() < 1e-9);
        assert!((sol.objective - 0.5).abs() < 1e-12);
        for (w, x) in trained.template.data().iter().zip(pos.tensor().data()) {
            assert!((w - x).abs() < 1e-9);
        }
        // Both margins sit exactly on 1.
        let m = trained
            .template
            .data()
            .iter()
            .zip(pos.tensor().data())
            .map(|(&a, &b)| a * b)
            .sum::<f64>()
            + trained.bias;
        assert!((m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separable_data_reaches_zero_hinge_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let set = random_set(&mut rng, 20, 12, 8.0);
        let cfg = SolverConfig { c: 1000.0, tolerance: 1e-8, ..Default::default() };
        let trained = train(&set, &cfg).unwrap();
        for i in 0..set.len() {
            let f: f64 = trained
                .template
                .data()
                .iter()
                .zip(set.feature(i))
                .map(|(&a, &b)| a * b)
                .sum::<f64>()
                + trained.bias;
            let margin = f64::from(set.labels()[i]) * f;
            assert!(margin >= 1.0 - 1e-6, "example {i} margin {margin}");
        }
    }

    #[test]
    fn kkt_holds_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for round in 0..10 {
            // Alternate between separable and heavily overlapping sets.
            let separation = if round % 2 == 0 { 6.0 } else { 0.3 };
            let set = random_set(&mut rng, 15, 8, separation);
            let cfg = SolverConfig { c: 1.0, tolerance: 1e-7, ..Default::default() };
            let gram = set.gram();
            let sol = solve_dual(&gram, set.labels(), &cfg, false).unwrap();
            let viol = kkt_max_violation(&gram, set.labels(), &sol.beta, sol.bias, cfg.c);
            assert!(viol <= 1e-6, "round {round}: KKT violation {viol}");
            // Dual feasibility: Σ y β = 0 and box constraints.
            let balance: f64 = sol
                .beta
                .iter()
                .zip(set.labels())
                .map(|(&b, &y)| b * f64::from(y))
                .sum();
            assert!(balance.abs() < 1e-9, "Σyβ = {balance}");
            assert!(sol.beta.iter().all(|&b| (-1e-15..=cfg.c + 1e-15).contains(&b)));
        }
    }

    #[test]
    fn primal_and_dual_decisions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let set = random_set(&mut rng, 12, 10, 1.5);
        let trained = train(&set, &SolverConfig::default()).unwrap();
        for _ in 0..20 {
            let probe = unit_tensor((0..10).map(|_| rng.gen_range(-1.0..1.0)).collect(), 1, 1, 10);
            let primal: f64 = trained
                .template
                .data()
                .iter()
                .zip(probe.tensor().data())
                .map(|(&a, &b)| a * b)
                .sum::<f64>()
                + trained.bias;
            let dual = dual_decision(&set, &trained.solution.beta, trained.bias, &probe);
            assert!((primal - dual).abs() <= 1e-9, "{primal} vs {dual}");
        }
    }

    #[test]
    fn objective_is_nondecreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let set = random_set(&mut rng, 25, 6, 0.5);
        let gram = set.gram();
        let sol = solve_dual(&gram, set.labels(), &SolverConfig::default(), true).unwrap();
        assert!(!sol.objective_trace.is_empty());
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "objective dropped: {} -> {}", w[0], w[1]);
        }
        let last = *sol.objective_trace.last().unwrap();
        assert!((last - sol.objective).abs() < 1e-8);
    }

    #[test]
    fn matches_independent_reference_qp() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for round in 0..4 {
            let set = random_set(&mut rng, 12, 7, if round % 2 == 0 { 3.0 } else { 0.4 });
            let gram = set.gram();
            let cfg = SolverConfig { c: 1.0, tolerance: 1e-9, ..Default::default() };
            let sol = solve_dual(&gram, set.labels(), &cfg, false).unwrap();
            let (ref_beta, ref_obj) = reference_qp(&gram, set.labels(), cfg.c);
            let our_obj = sol.objective.to_f64_lossy();
            assert!(
                (our_obj - ref_obj).abs() <= 1e-6,
                "round {round}: objective {our_obj} vs reference {ref_obj}"
            );
            // Coefficients need not be unique, but the reference solution
            // must also be dual-feasible for our problem.
            assert!(ref_beta.iter().all(|&b| (-1e-6..=cfg.c + 1e-6).contains(&b)));
        }
    }

    #[test]
    fn reference_qp_reproduces_the_analytic_pair() {
        // Anchor for the reference formulation itself: the antipodal pair
        // has K = [[1,-1],[-1,1]], y = (+1,-1), optimum β = (½,½), D = ½.
        let gram = vec![1.0, -1.0, -1.0, 1.0];
        let (beta, obj) = reference_qp(&gram, &[1, -1], 10.0);
        assert!((beta[0] - 0.5).abs() < 1e-6);
        assert!((beta[1] - 0.5).abs() < 1e-6);
        assert!((obj - 0.5).abs() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let mut set = TrainingSet::new((1, 1, 3));
        set.push(unit_tensor(vec![1.0, 0.0, 0.0], 1, 1, 3), 1).unwrap();
        assert!(train(&set, &SolverConfig::default()).is_err(), "single class");
        assert!(set.push(unit_tensor(vec![1.0, 0.0], 1, 2, 1), 1).is_err(), "shape");
        let bad = SolverConfig { c: 0.0, ..SolverConfig::<f64>::default() };
        assert!(bad.validate().is_err());
    }

    /// Independent check: solve the same dual as a generic box-and-equality
    /// QP with an interior-point method (minimize ½βᵀQβ − 1ᵀβ).
    fn reference_qp(gram: &[f64], labels: &[i8], c: f64) -> (Vec<f64>, f64) {
        use clarabel::algebra::CscMatrix;
        use clarabel::solver::{
            DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
        };

        let n = labels.len();
        let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();

        // P = Q (dense, column-compressed).
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::with_capacity(n * n);
        let mut nzval = Vec::with_capacity(n * n);
        colptr.push(0);
        for j in 0..n {
            for i in 0..n {
                rowval.push(i);
                nzval.push(y[i] * y[j] * gram[i * n + j]);
            }
            colptr.push(rowval.len());
        }
        let p = CscMatrix::new(n, n, colptr, rowval, nzval);

        // Constraints: yᵀβ = 0 (zero cone), β ≤ C and −β ≤ 0 (nonnegative).
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::with_capacity(3 * n);
        let mut nzval = Vec::with_capacity(3 * n);
        colptr.push(0);
        for j in 0..n {
            rowval.push(0);
            nzval.push(y[j]);
            rowval.push(1 + j);
            nzval.push(1.0);
            rowval.push(1 + n + j);
            nzval.push(-1.0);
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(1 + 2 * n, n, colptr, rowval, nzval);

        let q = vec![-1.0; n];
        let mut b = vec![0.0];
        b.extend(std::iter::repeat(c).take(n));
        b.extend(std::iter::repeat(0.0).take(n));
        let cones = [
            SupportedConeT::ZeroConeT(1),
            SupportedConeT::NonnegativeConeT(2 * n),
        ];
        let settings = DefaultSettings {
            verbose: false,
            ..Default::default()
        };
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).unwrap();
        solver.solve();
        assert_eq!(solver.solution.status, SolverStatus::Solved);
        let beta = solver.solution.x.clone();
        let obj = dual_objective(gram, labels, &beta);
        (beta, obj)
    }
}
