//! Third-order tensors, bounding boxes, and integral images — the
//! containers everything else is built on.

use std::path::Path;

use crate::scalar::Real;
use crate::{Error, Result};

const TENSOR_MAGIC: &[u8; 4] = b"LSKT";
const TENSOR_VERSION: u32 = 1;

/// Dense `M × N × d` tensor, row-major with the channel index fastest
/// (i.e. the d-vector at a pixel is contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    m: usize,
    n: usize,
    d: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(m: usize, n: usize, d: usize) -> Self {
        assert!(m > 0 && n > 0 && d > 0, "tensor dimensions must be positive");
        Tensor3 { m, n, d, data: vec![T::zero(); m * n * d] }
    }

    /// Wrap an existing buffer; `data.len()` must equal `m·n·d`.
    pub fn from_vec(m: usize, n: usize, d: usize, data: Vec<T>) -> Result<Self> {
        if m == 0 || n == 0 || d == 0 {
            return Err(Error::Validation(format!(
                "tensor dimensions must be positive, got {m}x{n}x{d}"
            )));
        }
        if data.len() != m * n * d {
            return Err(Error::ShapeMismatch(format!(
                "buffer holds {} values, {m}x{n}x{d} needs {}",
                data.len(),
                m * n * d
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("tensor contains non-finite values".into()));
        }
        Ok(Tensor3 { m, n, d, data })
    }

    /// Rows.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Columns.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Channels.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.d)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize, k: usize) -> T {
        debug_assert!(r < self.m && c < self.n && k < self.d);
        self.data[(r * self.n + c) * self.d + k]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, k: usize, v: T) {
        debug_assert!(r < self.m && c < self.n && k < self.d);
        self.data[(r * self.n + c) * self.d + k] = v;
    }

    /// The mode-3 fiber (channel vector) at a pixel.
    #[inline]
    pub fn fiber(&self, r: usize, c: usize) -> &[T] {
        let base = (r * self.n + c) * self.d;
        &self.data[base..base + self.d]
    }

    #[inline]
    pub fn fiber_mut(&mut self, r: usize, c: usize) -> &mut [T] {
        let base = (r * self.n + c) * self.d;
        &mut self.data[base..base + self.d]
    }

    /// Copy out the spatial window described by `bbox`, all channels.
    pub fn crop(&self, bbox: &BoundingBox) -> Result<Tensor3<T>> {
        let (x, y, w, h) = (bbox.x, bbox.y, bbox.w as usize, bbox.h as usize);
        if x < 0 || y < 0 || w == 0 || h == 0 {
            return Err(Error::Validation(format!("crop box {bbox:?} has no interior")));
        }
        let (x, y) = (x as usize, y as usize);
        if y + h > self.m || x + w > self.n {
            return Err(Error::Validation(format!(
                "crop box {bbox:?} exceeds {}x{} extent",
                self.m, self.n
            )));
        }
        let mut out = Vec::with_capacity(w * h * self.d);
        for r in y..y + h {
            let base = (r * self.n + x) * self.d;
            out.extend_from_slice(&self.data[base..base + w * self.d]);
        }
        Ok(Tensor3 { m: h, n: w, d: self.d, data: out })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Divide by the Frobenius norm; zero-norm input is an error because
    /// downstream similarity is undefined there.
    pub fn normalized(&self) -> Result<Tensor3<T>> {
        let norm = self.frobenius_norm();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(Error::Numerical("cannot normalize zero-norm tensor".into()));
        }
        let inv = T::one() / norm;
        let data = self.data.iter().map(|&v| v * inv).collect();
        Ok(Tensor3 { m: self.m, n: self.n, d: self.d, data })
    }

    /// Per-pixel sum of squared channel values, as an `M × N` plane.
    /// Feeding this to an integral image yields windowed Frobenius norms.
    pub fn channel_sq_sum(&self) -> Vec<T> {
        self.data
            .chunks_exact(self.d)
            .map(|fiber| fiber.iter().map(|&v| v * v).sum())
            .collect()
    }

    /// Serialize: magic, version, dimensions, then values as little-endian
    /// f64 in storage order.
    pub fn write_to(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        w.write_all(TENSOR_MAGIC)?;
        w.write_all(&TENSOR_VERSION.to_le_bytes())?;
        for dim in [self.m, self.n, self.d] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(mut r: impl std::io::Read, origin: &Path) -> Result<Tensor3<T>> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(origin, e))?;
        if &magic != TENSOR_MAGIC {
            return Err(Error::format(origin, "not a tensor file (bad magic)"));
        }
        let version = read_u32(&mut r, origin)?;
        if version != TENSOR_VERSION {
            return Err(Error::format(origin, format!("unsupported tensor version {version}")));
        }
        let m = read_u32(&mut r, origin)? as usize;
        let n = read_u32(&mut r, origin)? as usize;
        let d = read_u32(&mut r, origin)? as usize;
        let count = m
            .checked_mul(n)
            .and_then(|v| v.checked_mul(d))
            .filter(|&v| v > 0 && v <= (1 << 31))
            .ok_or_else(|| Error::format(origin, format!("implausible dimensions {m}x{n}x{d}")))?;
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf).map_err(|e| Error::io(origin, e))?;
        let data: Vec<T> = buf
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Tensor3::from_vec(m, n, d, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Tensor3<T>> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file), path)
    }
}

fn read_u32(r: &mut impl std::io::Read, origin: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(origin, e))?;
    Ok(u32::from_le_bytes(b))
}

/// Axis-aligned pixel rectangle. `x`,`y` is the top-left corner; signed so
/// that boxes can be expressed before clamping into an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn new(x: i64, y: i64, w: u32, h: u32) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> i64 {
        self.x + self.w as i64
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.h as i64
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> u64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0 || ih <= 0 {
            0
        } else {
            iw as u64 * ih as u64
        }
    }

    /// Intersection over union, 0 for disjoint boxes.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    /// Center in continuous pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }

    /// Clamp into an `m × n` image, shrinking as needed. Returns None when
    /// nothing remains.
    pub fn clamped(&self, m: usize, n: usize) -> Option<BoundingBox> {
        let x0 = self.x.max(0);
        let y0 = self.y.max(0);
        let x1 = self.right().min(n as i64);
        let y1 = self.bottom().min(m as i64);
        if x1 <= x0 || y1 <= y0 {
            None
        } else {
            Some(BoundingBox::new(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32))
        }
    }
}

/// Summed-area table over an `M × N` plane, padded with a zero first
/// row/column so window sums need no edge cases.
#[derive(Debug, Clone)]
pub struct IntegralImage<T> {
    m: usize,
    n: usize,
    cumulative: Vec<T>,
}

impl<T: Real> IntegralImage<T> {
    pub fn build(m: usize, n: usize, plane: &[T]) -> Self {
        assert_eq!(plane.len(), m * n, "plane length must match extent");
        let stride = n + 1;
        let mut cum = vec![T::zero(); (m + 1) * stride];
        for r in 0..m {
            let mut row_sum = T::zero();
            for c in 0..n {
                row_sum += plane[r * n + c];
                cum[(r + 1) * stride + c + 1] = cum[r * stride + c + 1] + row_sum;
            }
        }
        IntegralImage { m, n, cumulative: cum }
    }

    /// Sum of the plane over the box, via four table lookups.
    pub fn window_sum(&self, bbox: &BoundingBox) -> Result<T> {
        let (x, y, w, h) = (bbox.x, bbox.y, bbox.w as usize, bbox.h as usize);
        if x < 0 || y < 0 || w == 0 || h == 0 {
            return Err(Error::Validation(format!("window {bbox:?} has no interior")));
        }
        let (x, y) = (x as usize, y as usize);
        if y + h > self.m || x + w > self.n {
            return Err(Error::Validation(format!(
                "window {bbox:?} exceeds {}x{} extent",
                self.m, self.n
            )));
        }
        let s = self.n + 1;
        let sum = self.cumulative[(y + h) * s + x + w] + self.cumulative[y * s + x]
            - self.cumulative[y * s + x + w]
            - self.cumulative[(y + h) * s + x];
        Ok(sum)
    }
}
