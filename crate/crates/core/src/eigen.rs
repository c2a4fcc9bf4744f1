//! Symmetric eigendecomposition by the cyclic Jacobi method.
//!
//! The matrices this crate diagonalizes are small (25×25 descriptor
//! covariances, Gram matrices of a few dozen training examples), where
//! Jacobi is simple, numerically excellent, and plenty fast.

use crate::scalar::Real;
use crate::{Error, Result};

/// Eigenvalues (descending) and matching eigenvectors (columns of `vectors`,
/// stored row-major `n × n`) of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Real> SymEigen<T> {
    /// Column `j` of the eigenvector matrix.
    pub fn vector(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

/// Diagonalize a symmetric `n × n` matrix given row-major. Asymmetry beyond
/// round-off is rejected rather than silently symmetrized.
pub fn sym_eigen<T: Real>(a: &[T], n: usize) -> Result<SymEigen<T>> {
    if a.len() != n * n || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "matrix buffer {} does not hold {n}x{n}",
            a.len()
        )));
    }
    let scale = a.iter().fold(T::zero(), |acc, &v| acc.max(v.abs())) + T::one();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[i * n + j] - a[j * n + i]).abs() > T::of(1e-9) * scale {
                return Err(Error::Validation("matrix is not symmetric".into()));
            }
        }
    }

    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }

    let eps = T::epsilon() * scale;
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= eps {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= eps * T::of(1e-3) {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Standard stable rotation angle computation.
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Sort eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let values: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (dst, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + dst] = v[row * n + src];
        }
    }
    Ok(SymEigen { values, vectors, n })
}
