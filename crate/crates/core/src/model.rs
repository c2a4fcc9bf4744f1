//! Trained detector bundle: descriptor parameters, decorrelation basis,
//! template tensor, bias, scale ladder, and score threshold, with a
//! versioned binary serialization.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::lsk::{dense_descriptors, LskParams};
use crate::pca::{project, PcaBasis};
use crate::scalar::Real;
use crate::tensor::Tensor3;
use crate::{image::Image, Error, Result};

const MODEL_MAGIC: &[u8; 4] = b"LSKM";
const MODEL_VERSION: u32 = 1;

/// Everything needed to run detection: the feature recipe and the trained
/// template. The template lives in the decorrelated feature space, so its
/// channel count must match the basis output and the descriptor length
/// must match the basis input.
#[derive(Debug, Clone)]
pub struct Model<T> {
    pub lsk: LskParams<T>,
    pub pca: PcaBasis<T>,
    pub template: Tensor3<T>,
    pub bias: T,
    pub scales: Vec<f64>,
    pub threshold: f64,
}

impl<T: Real> Model<T> {
    pub fn new(
        lsk: LskParams<T>,
        pca: PcaBasis<T>,
        template: Tensor3<T>,
        bias: T,
        scales: Vec<f64>,
        threshold: f64,
    ) -> Result<Self> {
        lsk.validate()?;
        if pca.l != lsk.descriptor_len() {
            return Err(Error::ShapeMismatch(format!(
                "basis expects descriptors of length {}, window size {} produces {}",
                pca.l,
                lsk.window_size,
                lsk.descriptor_len()
            )));
        }
        if template.d() != pca.d {
            return Err(Error::ShapeMismatch(format!(
                "template has {} channels, basis produces {}",
                template.d(),
                pca.d
            )));
        }
        if !bias.is_finite() {
            return Err(Error::Validation("bias must be finite".into()));
        }
        if scales.is_empty() {
            return Err(Error::Validation("scale ladder must not be empty".into()));
        }
        if scales.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Validation(format!("scales must be positive, got {scales:?}")));
        }
        if !threshold.is_finite() {
            return Err(Error::Validation("threshold must be finite".into()));
        }
        Ok(Model { lsk, pca, template, bias, scales, threshold })
    }

    /// Detector window extent and channel count.
    pub fn detector_shape(&self) -> (usize, usize, usize) {
        self.template.shape()
    }

    /// Full feature pipeline for one image: dense descriptors, then
    /// projection onto the decorrelation basis.
    pub fn features(&self, img: &Image<T>) -> Result<Tensor3<T>> {
        let h = dense_descriptors(img, &self.lsk)?;
        project(&h, &self.pca)
    }

    /// Decision value for a single detector-shaped feature window.
    pub fn decision(&self, window: &Tensor3<T>) -> Result<T> {
        if window.shape() != self.template.shape() {
            return Err(Error::ShapeMismatch(format!(
                "window shape {:?} does not match detector {:?}",
                window.shape(),
                self.template.shape()
            )));
        }
        let unit = window.normalized()?;
        let dot: T = self
            .template
            .data()
            .iter()
            .zip(unit.data())
            .map(|(&a, &b)| a * b)
            .sum();
        Ok(dot + self.bias)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MODEL_MAGIC)?;
        put_u32(&mut w, MODEL_VERSION)?;
        put_u32(&mut w, self.lsk.window_size as u32)?;
        for v in [self.lsk.epsilon, self.lsk.tau, self.lsk.alpha] {
            put_f64(&mut w, v.to_f64_lossy())?;
        }
        put_u32(&mut w, self.pca.l as u32)?;
        put_u32(&mut w, self.pca.d as u32)?;
        put_f64(&mut w, self.pca.energy_fraction.to_f64_lossy())?;
        put_slice(&mut w, &self.pca.mean)?;
        put_slice(&mut w, &self.pca.eigenvalues)?;
        put_slice(&mut w, &self.pca.basis)?;
        let (m, n, d) = self.template.shape();
        put_u32(&mut w, m as u32)?;
        put_u32(&mut w, n as u32)?;
        put_u32(&mut w, d as u32)?;
        put_slice(&mut w, self.template.data())?;
        put_f64(&mut w, self.bias.to_f64_lossy())?;
        put_u32(&mut w, self.scales.len() as u32)?;
        for &s in &self.scales {
            put_f64(&mut w, s)?;
        }
        put_f64(&mut w, self.threshold)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(mut r: impl Read, origin: &Path) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(origin, e))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::format(origin, "not a model file (bad magic)"));
        }
        let version = take_u32(&mut r, origin)?;
        if version != MODEL_VERSION {
            return Err(Error::format(origin, format!("unsupported model version {version}")));
        }
        let window_size = take_u32(&mut r, origin)? as usize;
        let epsilon = T::of(take_f64(&mut r, origin)?);
        let tau = T::of(take_f64(&mut r, origin)?);
        let alpha = T::of(take_f64(&mut r, origin)?);
        let lsk = LskParams { window_size, epsilon, tau, alpha };

        let l = take_u32(&mut r, origin)? as usize;
        let d = take_u32(&mut r, origin)? as usize;
        if l == 0 || d == 0 || d > l || l > 1 << 16 {
            return Err(Error::format(origin, format!("implausible basis shape {l}x{d}")));
        }
        let energy_fraction = T::of(take_f64(&mut r, origin)?);
        let mean = take_vec::<T>(&mut r, origin, l)?;
        let eigenvalues = take_vec::<T>(&mut r, origin, d)?;
        let basis = take_vec::<T>(&mut r, origin, l * d)?;
        let pca = PcaBasis { l, d, mean, eigenvalues, basis, energy_fraction };

        let det_m = take_u32(&mut r, origin)? as usize;
        let det_n = take_u32(&mut r, origin)? as usize;
        let det_d = take_u32(&mut r, origin)? as usize;
        if det_d != d {
            return Err(Error::format(
                origin,
                format!("template channels {det_d} disagree with basis output {d}"),
            ));
        }
        let count = det_m
            .checked_mul(det_n)
            .and_then(|v| v.checked_mul(det_d))
            .filter(|&v| v > 0 && v <= 1 << 31)
            .ok_or_else(|| {
                Error::format(origin, format!("implausible template shape {det_m}x{det_n}x{det_d}"))
            })?;
        let template = Tensor3::from_vec(det_m, det_n, det_d, take_vec::<T>(&mut r, origin, count)?)?;

        let bias = T::of(take_f64(&mut r, origin)?);
        let n_scales = take_u32(&mut r, origin)? as usize;
        if n_scales == 0 || n_scales > 1 << 10 {
            return Err(Error::format(origin, format!("implausible scale count {n_scales}")));
        }
        let mut scales = Vec::with_capacity(n_scales);
        for _ in 0..n_scales {
            scales.push(take_f64(&mut r, origin)?);
        }
        let threshold = take_f64(&mut r, origin)?;

        Model::new(lsk, pca, template, bias, scales, threshold)
            .map_err(|e| Error::format(origin, format!("inconsistent model contents: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), path)
    }
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_slice<T: Real>(w: &mut impl Write, values: &[T]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&buf)
}

fn take_u32(r: &mut impl Read, origin: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(origin, e))?;
    Ok(u32::from_le_bytes(b))
}

fn take_f64(r: &mut impl Read, origin: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io(origin, e))?;
    let v = f64::from_le_bytes(b);
    if !v.is_finite() {
        return Err(Error::format(origin, "non-finite value in model file"));
    }
    Ok(v)
}

fn take_vec<T: Real>(r: &mut impl Read, origin: &Path, count: usize) -> Result<Vec<T>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(origin, e))?;
    let mut out = Vec::with_capacity(count);
    for c in buf.chunks_exact(8) {
        let v = f64::from_le_bytes(c.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(origin, "non-finite value in model file"));
        }
        out.push(T::of(v));
    }
    Ok(out)
}
