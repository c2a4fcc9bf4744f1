//! Channel decorrelation: learn a small orthonormal basis from sampled
//! descriptors and project descriptor tensors fiber-wise onto it.

use rayon::prelude::*;

use crate::eigen::sym_eigen;
use crate::scalar::Real;
use crate::tensor::Tensor3;
use crate::{Error, Result};

/// Orthonormal projection basis with the sample mean folded in, so
/// training and detection see identically centered fibers.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis<T> {
    /// Input dimensionality (descriptor length).
    pub l: usize,
    /// Retained components.
    pub d: usize,
    /// Sample mean, length `l`.
    pub mean: Vec<T>,
    /// Leading eigenvalues of the sample covariance, length `d`.
    pub eigenvalues: Vec<T>,
    /// Eigenvector matrix, row-major `l × d` (columns are components).
    pub basis: Vec<T>,
    /// Cumulative spectrum fraction actually captured by the `d` components.
    pub energy_fraction: T,
}

impl<T: Real> PcaBasis<T> {
    /// The trivial basis that projects onto all canonical axes with zero
    /// mean; `project` through it is the identity.
    pub fn identity(l: usize) -> Self {
        let mut basis = vec![T::zero(); l * l];
        for i in 0..l {
            basis[i * l + i] = T::one();
        }
        PcaBasis {
            l,
            d: l,
            mean: vec![T::zero(); l],
            eigenvalues: vec![T::one(); l],
            basis,
            energy_fraction: T::one(),
        }
    }

    /// Max absolute deviation of `VᵀV` from the identity.
    pub fn orthonormality_residual(&self) -> T {
        let mut worst = T::zero();
        for a in 0..self.d {
            for b in a..self.d {
                let dot: T = (0..self.l)
                    .map(|i| self.basis[i * self.d + a] * self.basis[i * self.d + b])
                    .sum();
                let expect = if a == b { T::one() } else { T::zero() };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }
}

/// Smallest component count whose cumulative spectrum fraction strictly
/// exceeds the target; falls back to the full dimension when rounding
/// leaves the target unreached.
pub fn choose_dim<T: Real>(eigenvalues: &[T], energy_target: T) -> usize {
    let total: T = eigenvalues.iter().map(|&v| v.max(T::zero())).sum();
    let mut cum = T::zero();
    for (i, &v) in eigenvalues.iter().enumerate() {
        cum += v.max(T::zero());
        if cum > energy_target * total {
            return i + 1;
        }
    }
    eigenvalues.len()
}

/// Fit the basis to sampled descriptors (`samples` is a flat buffer of
/// `count` concatenated `l`-vectors).
pub fn fit_pca<T: Real>(samples: &[T], l: usize, energy_target: T) -> Result<PcaBasis<T>> {
    if l == 0 || samples.len() % l != 0 {
        return Err(Error::ShapeMismatch(format!(
            "sample buffer of {} is not a multiple of descriptor length {l}",
            samples.len()
        )));
    }
    let count = samples.len() / l;
    if count < 2 {
        return Err(Error::Validation(format!("pca needs at least 2 samples, got {count}")));
    }
    if !(energy_target > T::zero() && energy_target <= T::one()) {
        return Err(Error::Validation(format!(
            "energy target must lie in (0, 1], got {energy_target}"
        )));
    }

    let inv_count = T::one() / T::of(count as f64);
    let mut mean = vec![T::zero(); l];
    for row in samples.chunks_exact(l) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m *= inv_count;
    }

    // Sample covariance, accumulated over centered rows.
    let mut cov = vec![T::zero(); l * l];
    let mut centered = vec![T::zero(); l];
    for row in samples.chunks_exact(l) {
        for i in 0..l {
            centered[i] = row[i] - mean[i];
        }
        for i in 0..l {
            let ci = centered[i];
            for j in i..l {
                cov[i * l + j] += ci * centered[j];
            }
        }
    }
    let denom = T::one() / T::of((count - 1) as f64);
    for i in 0..l {
        for j in i..l {
            let v = cov[i * l + j] * denom;
            cov[i * l + j] = v;
            cov[j * l + i] = v;
        }
    }

    let total_var: T = (0..l).map(|i| cov[i * l + i]).sum();
    if total_var <= T::zero() {
        return Err(Error::Validation("zero-variance sample set".into()));
    }

    let eig = sym_eigen(&cov, l)?;
    let d = choose_dim(&eig.values, energy_target);
    let captured: T = eig.values[..d].iter().map(|&v| v.max(T::zero())).sum();
    let total: T = eig.values.iter().map(|&v| v.max(T::zero())).sum();

    let mut basis = vec![T::zero(); l * d];
    for j in 0..d {
        let mut col = eig.vector(j);
        // Deterministic sign: largest-magnitude entry is positive.
        let lead = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if col[lead] < T::zero() {
            for v in &mut col {
                *v = -*v;
            }
        }
        for i in 0..l {
            basis[i * d + j] = col[i];
        }
    }

    Ok(PcaBasis {
        l,
        d,
        mean,
        eigenvalues: eig.values[..d].to_vec(),
        basis,
        energy_fraction: captured / total,
    })
}

/// Mode-3 projection: every channel fiber is centered and projected onto
/// the basis columns, shrinking `M × N × l` to `M × N × d`.
pub fn project<T: Real>(h: &Tensor3<T>, basis: &PcaBasis<T>) -> Result<Tensor3<T>> {
    if h.d() != basis.l {
        return Err(Error::ShapeMismatch(format!(
            "tensor has {} channels, basis expects {}",
            h.d(),
            basis.l
        )));
    }
    let (m, n, l) = h.shape();
    let d = basis.d;
    let mut out = Tensor3::zeros(m, n, d);
    out.data_mut()
        .par_chunks_mut(n * d)
        .enumerate()
        .for_each(|(r, row)| {
            let mut centered = vec![T::zero(); l];
            for c in 0..n {
                let fiber = h.fiber(r, c);
                for i in 0..l {
                    centered[i] = fiber[i] - basis.mean[i];
                }
                let dst = &mut row[c * d..(c + 1) * d];
                for (j, slot) in dst.iter_mut().enumerate() {
                    *slot = (0..l).map(|i| basis.basis[i * d + j] * centered[i]).sum();
                }
            }
        });
    Ok(out)
}
