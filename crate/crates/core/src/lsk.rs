//! Local steering kernel descriptors.
//!
//! Per pixel: aggregate gradients over a window into a structure tensor,
//! regularize it into a well-conditioned local metric, then express the
//! pixel's neighborhood geometry as a normalized vector of exponentiated
//! quadratic forms. Densely over an image this yields an `M × N × p²`
//! descriptor tensor.

use rayon::prelude::*;

use crate::image::Image;
use crate::scalar::Real;
use crate::tensor::Tensor3;
use crate::{Error, Result};

/// Intensities are divided by this before gradient aggregation so the
/// exponentials in the descriptor stay in a safe regime for 0–255 input;
/// raw 8-bit gradients would push quadratic forms past the range where
/// `exp(-q)` underflows to zero and descriptor entries lose positivity.
const INTENSITY_SCALE: f64 = 1.0 / 255.0;

/// Descriptor parameters. `window_size` is used both for gradient
/// aggregation and as the descriptor footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LskParams<T> {
    pub window_size: usize,
    pub epsilon: T,
    pub tau: T,
    pub alpha: T,
}

impl<T: Real> Default for LskParams<T> {
    fn default() -> Self {
        LskParams {
            window_size: 5,
            epsilon: T::of(0.1),
            tau: T::one(),
            alpha: T::of(0.4),
        }
    }
}

impl<T: Real> LskParams<T> {
    pub fn with_alpha(alpha: f64) -> Self {
        LskParams { alpha: T::of(alpha), ..Self::default() }
    }

    /// Descriptor length `l = p²`.
    pub fn descriptor_len(&self) -> usize {
        self.window_size * self.window_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size % 2 == 0 {
            return Err(Error::Validation(format!(
                "window size must be odd and at least 3, got {}",
                self.window_size
            )));
        }
        if !(self.epsilon > T::zero()) || !(self.tau > T::zero()) || self.alpha < T::zero() {
            return Err(Error::Validation(
                "lsk parameters require epsilon > 0, tau > 0, alpha >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Horizontal (`gx`) and vertical (`gy`) derivative planes of an image.
#[derive(Debug, Clone)]
pub struct GradientField<T> {
    m: usize,
    n: usize,
    gx: Vec<T>,
    gy: Vec<T>,
}

impl<T: Real> GradientField<T> {
    pub fn from_planes(m: usize, n: usize, gx: Vec<T>, gy: Vec<T>) -> Self {
        assert_eq!(gx.len(), m * n);
        assert_eq!(gy.len(), m * n);
        GradientField { m, n, gx, gy }
    }

    pub fn extent(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    #[inline]
    pub fn gx(&self, r: usize, c: usize) -> T {
        self.gx[r * self.n + c]
    }

    #[inline]
    pub fn gy(&self, r: usize, c: usize) -> T {
        self.gy[r * self.n + c]
    }

    fn scaled(mut self, factor: T) -> Self {
        for v in self.gx.iter_mut().chain(self.gy.iter_mut()) {
            *v *= factor;
        }
        self
    }
}

/// Central differences in the interior, one-sided at the borders.
pub fn gradients<T: Real>(img: &Image<T>) -> Result<GradientField<T>> {
    let (m, n) = (img.height(), img.width());
    if m < 3 || n < 3 {
        return Err(Error::Validation(format!(
            "gradients need at least a 3x3 image, got {m}x{n}"
        )));
    }
    let half = T::of(0.5);
    let mut gx = vec![T::zero(); m * n];
    let mut gy = vec![T::zero(); m * n];
    for r in 0..m {
        for c in 0..n {
            gx[r * n + c] = if c == 0 {
                img.get(r, 1) - img.get(r, 0)
            } else if c == n - 1 {
                img.get(r, n - 1) - img.get(r, n - 2)
            } else {
                (img.get(r, c + 1) - img.get(r, c - 1)) * half
            };
            gy[r * n + c] = if r == 0 {
                img.get(1, c) - img.get(0, c)
            } else if r == m - 1 {
                img.get(m - 1, c) - img.get(m - 2, c)
            } else {
                (img.get(r + 1, c) - img.get(r - 1, c)) * half
            };
        }
    }
    Ok(GradientField { m, n, gx, gy })
}

/// Symmetric 2×2 gradient covariance; `c11` pairs with the horizontal
/// axis, `c22` with the vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringMatrix<T> {
    pub c11: T,
    pub c12: T,
    pub c22: T,
}

impl<T: Real> SteeringMatrix<T> {
    pub fn is_zero(&self) -> bool {
        self.c11 == T::zero() && self.c22 == T::zero() && self.c12 == T::zero()
    }

    /// Closed-form eigen decomposition, eigenvalues descending, unit
    /// eigenvectors. Degenerate (isotropic) matrices return the canonical
    /// axes.
    pub fn eigen(&self) -> ((T, [T; 2]), (T, [T; 2])) {
        let half = T::of(0.5);
        let mean = (self.c11 + self.c22) * half;
        let diff = (self.c11 - self.c22) * half;
        let disc = (diff * diff + self.c12 * self.c12).sqrt();
        let l1 = mean + disc;
        let l2 = mean - disc;

        let scale = self.c11.abs().max(self.c22.abs()).max(self.c12.abs());
        if disc <= T::epsilon() * scale || scale == T::zero() {
            return ((l1, [T::one(), T::zero()]), (l2, [T::zero(), T::one()]));
        }
        // (A − λI)u = 0 gives u ∝ (c12, λ − c11) or (λ − c22, c12);
        // pick the longer for conditioning.
        let a = [self.c12, l1 - self.c11];
        let b = [l1 - self.c22, self.c12];
        let na = a[0] * a[0] + a[1] * a[1];
        let nb = b[0] * b[0] + b[1] * b[1];
        let u1 = if na >= nb { norm2(a) } else { norm2(b) };
        let u2 = [-u1[1], u1[0]];
        ((l1, u1), (l2, u2))
    }

    /// Quadratic form at the offset `(dx, dy)`.
    #[inline]
    pub fn quad(&self, dx: T, dy: T) -> T {
        self.c11 * dx * dx + T::of(2.0) * self.c12 * dx * dy + self.c22 * dy * dy
    }

    /// Turn the (PSD) covariance into a strictly positive-definite local
    /// metric: singular values `s_i = sqrt(λ_i)` are mapped through
    /// `(s1·s2 + ε)^α · ((s1+τ)/(s2+τ), (s2+τ)/(s1+τ))` along the
    /// original eigenvectors.
    pub fn regularize(&self, params: &LskParams<T>) -> Result<SteeringMatrix<T>> {
        if !(self.c11.is_finite() && self.c12.is_finite() && self.c22.is_finite()) {
            return Err(Error::Numerical("steering matrix has non-finite entries".into()));
        }
        Ok(self.regularize_unchecked(params))
    }

    fn regularize_unchecked(&self, params: &LskParams<T>) -> SteeringMatrix<T> {
        let ((l1, u1), (l2, u2)) = self.eigen();
        let s1 = l1.max(T::zero()).sqrt();
        let s2 = l2.max(T::zero()).sqrt();
        let prefactor = (s1 * s2 + params.epsilon).powf(params.alpha);
        let k1 = (s1 + params.tau) / (s2 + params.tau);
        let k2 = (s2 + params.tau) / (s1 + params.tau);
        SteeringMatrix {
            c11: prefactor * (k1 * u1[0] * u1[0] + k2 * u2[0] * u2[0]),
            c12: prefactor * (k1 * u1[0] * u1[1] + k2 * u2[0] * u2[1]),
            c22: prefactor * (k1 * u1[1] * u1[1] + k2 * u2[1] * u2[1]),
        }
    }
}

fn norm2<T: Real>(v: [T; 2]) -> [T; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// Sum the per-pixel gradient products over a `p × p` window centered at
/// `(r, c)`, clipped at the image borders.
pub fn steering_matrix<T: Real>(
    g: &GradientField<T>,
    r: usize,
    c: usize,
    p: usize,
) -> SteeringMatrix<T> {
    let (m, n) = g.extent();
    let half = (p / 2) as isize;
    let r0 = (r as isize - half).max(0) as usize;
    let r1 = ((r as isize + half) as usize).min(m - 1);
    let c0 = (c as isize - half).max(0) as usize;
    let c1 = ((c as isize + half) as usize).min(n - 1);
    let (mut c11, mut c12, mut c22) = (T::zero(), T::zero(), T::zero());
    for rr in r0..=r1 {
        for cc in c0..=c1 {
            let gx = g.gx(rr, cc);
            let gy = g.gy(rr, cc);
            c11 += gx * gx;
            c12 += gx * gy;
            c22 += gy * gy;
        }
    }
    SteeringMatrix { c11, c12, c22 }
}

/// Reflect an index into `[0, len)` (mirror padding that repeats the edge
/// sample).
#[inline]
fn mirror(mut i: isize, len: usize) -> usize {
    let len = len as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= len {
            i = 2 * len - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// The normalized descriptor at `(r, c)` given the regularized metric
/// field (row-major `m × n`). Neighbor metrics outside the image are
/// mirror-padded. Entry order: window rows top to bottom, columns left to
/// right.
pub fn lsk_descriptor<T: Real>(
    field: &[SteeringMatrix<T>],
    m: usize,
    n: usize,
    r: usize,
    c: usize,
    params: &LskParams<T>,
) -> Vec<T> {
    let p = params.window_size;
    let half = (p / 2) as isize;
    let mut out = Vec::with_capacity(p * p);
    let mut sum = T::zero();
    for dy in -half..=half {
        let nr = mirror(r as isize + dy, m);
        for dx in -half..=half {
            let nc = mirror(c as isize + dx, n);
            let metric = &field[nr * n + nc];
            let q = metric.quad(T::of(dx as f64), T::of(dy as f64));
            let w = (-q).exp();
            sum += w;
            out.push(w);
        }
    }
    for w in &mut out {
        *w /= sum;
    }
    out
}

/// Dense descriptor tensor of a whole image: `M × N × p²`.
pub fn dense_descriptors<T: Real>(img: &Image<T>, params: &LskParams<T>) -> Result<Tensor3<T>> {
    params.validate()?;
    let (m, n) = (img.height(), img.width());
    let g = gradients(img)?.scaled(T::of(INTENSITY_SCALE));

    // A perfectly flat window carries no orientation at all; keep its
    // metric at zero so the descriptor degrades to uniform rather than to
    // the isotropic-but-peaked kernel the regularizer would produce.
    let field: Vec<SteeringMatrix<T>> = (0..m * n)
        .into_par_iter()
        .map(|i| {
            let raw = steering_matrix(&g, i / n, i % n, params.window_size);
            if raw.is_zero() {
                raw
            } else {
                raw.regularize_unchecked(params)
            }
        })
        .collect();

    let l = params.descriptor_len();
    let mut out = Tensor3::zeros(m, n, l);
    out.data_mut()
        .par_chunks_mut(n * l)
        .enumerate()
        .for_each(|(r, row)| {
            for c in 0..n {
                let desc = lsk_descriptor(&field, m, n, r, c, params);
                row[c * l..(c + 1) * l].copy_from_slice(&desc);
            }
        });
    Ok(out)
}
