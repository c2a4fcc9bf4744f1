//! Matrix cosine similarity: the Frobenius inner product of unit-norm
//! tensors, which is the kernel the classifier trains with.

use crate::scalar::Real;
use crate::tensor::Tensor3;
use crate::{Error, Result};

/// A tensor scaled to unit Frobenius norm, remembering the original norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTensor<T> {
    tensor: Tensor3<T>,
    original_norm: T,
}

impl<T: Real> NormalizedTensor<T> {
    pub fn new(t: Tensor3<T>) -> Result<Self> {
        let norm = t.frobenius_norm();
        let tensor = t.normalized()?;
        Ok(NormalizedTensor { tensor, original_norm: norm })
    }

    pub fn tensor(&self) -> &Tensor3<T> {
        &self.tensor
    }

    pub fn original_norm(&self) -> T {
        self.original_norm
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.tensor.shape()
    }
}

fn dot<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>) -> T {
    a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).sum()
}

/// Cosine between two same-shaped tensors, in `[-1, 1]`. Zero-norm
/// operands are an error: the similarity is undefined and a silent zero
/// would mask degenerate features upstream.
pub fn mcs<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "mcs over {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let na = a.frobenius_norm();
    let nb = b.frobenius_norm();
    if na <= T::zero() || nb <= T::zero() {
        return Err(Error::Numerical("mcs of a zero-norm tensor".into()));
    }
    // Clamp away the last-ulp excursions so |mcs| ≤ 1 holds exactly.
    Ok((dot(a, b) / (na * nb)).min(T::one()).max(-T::one()))
}

/// Pairwise similarity matrix (row-major `k × k`) of a set of normalized
/// tensors; symmetric and positive semidefinite.
pub fn gram<T: Real>(set: &[NormalizedTensor<T>]) -> Result<Vec<T>> {
    let k = set.len();
    if k == 0 {
        return Err(Error::Validation("gram of an empty set".into()));
    }
    let shape = set[0].shape();
    if let Some(bad) = set.iter().find(|t| t.shape() != shape) {
        return Err(Error::ShapeMismatch(format!(
            "gram over mixed shapes {:?} vs {shape:?}",
            bad.shape()
        )));
    }
    let mut out = vec![T::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let v = dot(set[i].tensor(), set[j].tensor())
                .min(T::one())
                .max(-T::one());
            out[i * k + j] = v;
            out[j * k + i] = v;
        }
    }
    Ok(out)
}
