//! Grayscale image container and file I/O (binary PGM and PNG).

use std::path::Path;

use crate::scalar::Real;
use crate::tensor::BoundingBox;
use crate::{Error, Result};

/// Row-major single-channel image with real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

/// An image paired with its truth boxes — the unit datasets are made of.
#[derive(Debug, Clone)]
pub struct AnnotatedFrame<T> {
    pub image: Image<T>,
    pub truths: Vec<BoundingBox>,
}

impl<T: Real> Image<T> {
    pub fn from_pixels(height: usize, width: usize, pixels: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation("image extent must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if !pixels.iter().all(|p| p.is_finite()) {
            return Err(Error::Numerical("image contains non-finite intensities".into()));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn constant(height: usize, width: usize, value: T) -> Self {
        Image { width, height, pixels: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [T] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.height && c < self.width);
        self.pixels[r * self.width + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.height && c < self.width);
        self.pixels[r * self.width + c] = v;
    }

    /// Linear min-max map of `[lo, hi]` onto `[0, 255]`, clamping outside
    /// the range.
    pub fn rescaled(&self, lo: f64, hi: f64) -> Result<Image<T>> {
        if !(hi > lo) {
            return Err(Error::Validation(format!("rescale range ({lo}, {hi}) is empty")));
        }
        let scale = 255.0 / (hi - lo);
        let pixels = self
            .pixels
            .iter()
            .map(|&p| {
                let v = (p.to_f64_lossy() - lo) * scale;
                T::of(v.clamp(0.0, 255.0))
            })
            .collect();
        Ok(Image { width: self.width, height: self.height, pixels })
    }

    /// Bilinear resize with center-aligned sampling (source coordinate
    /// `(i + 0.5)·scale − 0.5`) and border clamping.
    pub fn resized(&self, new_height: usize, new_width: usize) -> Image<T> {
        assert!(new_height > 0 && new_width > 0);
        if new_height == self.height && new_width == self.width {
            return self.clone();
        }
        let sy = self.height as f64 / new_height as f64;
        let sx = self.width as f64 / new_width as f64;
        let mut pixels = Vec::with_capacity(new_height * new_width);
        for r in 0..new_height {
            let fy = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = T::of(fy - y0 as f64);
            for c in 0..new_width {
                let fx = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = T::of(fx - x0 as f64);
                let top = self.get(y0, x0) + (self.get(y0, x1) - self.get(y0, x0)) * wx;
                let bot = self.get(y1, x0) + (self.get(y1, x1) - self.get(y1, x0)) * wx;
                pixels.push(top + (bot - top) * wy);
            }
        }
        Image { width: new_width, height: new_height, pixels }
    }

    /// Write as binary 8-bit PGM, rounding and clamping intensities to
    /// 0–255.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::with_capacity(self.pixels.len() + 32);
        out.extend_from_slice(format!("P5\n{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend(
            self.pixels
                .iter()
                .map(|p| p.to_f64_lossy().round().clamp(0.0, 255.0) as u8),
        );
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Load an 8- or 16-bit grayscale image (PGM or PNG, detected by magic
/// bytes). `rescale = Some((lo, hi))` maps that intensity range linearly
/// onto 0–255 with clamping; otherwise raw sample values are kept.
pub fn load_image<T: Real>(path: impl AsRef<Path>, rescale: Option<(f64, f64)>) -> Result<Image<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = if bytes.starts_with(b"P5") {
        decode_pgm(&bytes, path)?
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes, path)?
    } else {
        return Err(Error::format(path, "unrecognized image format (want binary PGM or PNG)"));
    };
    match rescale {
        Some((lo, hi)) => img.rescaled(lo, hi),
        None => Ok(img),
    }
}

fn decode_pgm<T: Real>(bytes: &[u8], path: &Path) -> Result<Image<T>> {
    let mut pos = 2; // past "P5"
    let mut fields = [0usize; 3];
    for f in &mut fields {
        *f = read_pgm_field(bytes, &mut pos, path)?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "zero image extent"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(path, format!("invalid maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let count = width * height;
    let pixels: Vec<T> = if maxval < 256 {
        let raster = bytes
            .get(pos..pos + count)
            .ok_or_else(|| Error::format(path, "truncated raster"))?;
        raster.iter().map(|&b| T::of(f64::from(b))).collect()
    } else {
        // Two bytes per sample, most significant first.
        let raster = bytes
            .get(pos..pos + 2 * count)
            .ok_or_else(|| Error::format(path, "truncated raster"))?;
        raster
            .chunks_exact(2)
            .map(|c| T::of(f64::from(u16::from_be_bytes([c[0], c[1]]))))
            .collect()
    };
    Image::from_pixels(height, width, pixels)
}

/// Read one decimal header field, skipping whitespace and `#` comments.
fn read_pgm_field(bytes: &[u8], pos: &mut usize, path: &Path) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while !matches!(bytes.get(*pos), None | Some(b'\n')) {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            _ => return Err(Error::format(path, "malformed PGM header")),
        }
    }
    let mut value = 0usize;
    while let Some(b) = bytes.get(*pos).filter(|b| b.is_ascii_digit()) {
        value = value * 10 + usize::from(b - b'0');
        if value > 1 << 30 {
            return Err(Error::format(path, "PGM header field out of range"));
        }
        *pos += 1;
    }
    Ok(value)
}

fn decode_png<T: Real>(bytes: &[u8], path: &Path) -> Result<Image<T>> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))?;
    match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let pixels = img.into_raw().into_iter().map(|b| T::of(f64::from(b))).collect();
            Image::from_pixels(h, w, pixels)
        }
        image::DynamicImage::ImageLuma16(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let pixels = img.into_raw().into_iter().map(|b| T::of(f64::from(b))).collect();
            Image::from_pixels(h, w, pixels)
        }
        _ => Err(Error::format(path, "color images are not supported (grayscale only)")),
    }
}

/// Write a 16-bit binary PGM (two bytes per sample, most significant
/// first). Used for fixtures that exercise the high-bit-depth path.
pub fn write_pgm16(path: impl AsRef<Path>, height: usize, width: usize, samples: &[u16]) -> Result<()> {
    let path = path.as_ref();
    assert_eq!(samples.len(), height * width);
    let mut out = Vec::with_capacity(samples.len() * 2 + 32);
    out.extend_from_slice(format!("P5\n{width} {height}\n65535\n").as_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm8_round_trip_keeps_raw_intensities() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gradient.pgm");
        let img =
            Image::from_pixels(2, 3, vec![0.0f64, 50.0, 100.0, 150.0, 200.0, 255.0]).unwrap();
        img.save_pgm(&path).unwrap();
        let back: Image<f64> = load_image(&path, None).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        std::fs::write(&path, b"P5\n# comment line\n2 1\n255\n\x07\x09").unwrap();
        let img: Image<f64> = load_image(&path, None).unwrap();
        assert_eq!(img.pixels(), &[7.0, 9.0]);
    }

    #[test]
    fn pgm16_constant_rescales_to_midpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("thermal.pgm");
        write_pgm16(&path, 2, 2, &[33000; 4]).unwrap();
        let img: Image<f64> = load_image(&path, Some((31000.0, 35000.0))).unwrap();
        for &p in img.pixels() {
            assert!((p - 127.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_endpoints_and_clamping() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("range.pgm");
        write_pgm16(&path, 1, 3, &[31000, 35000, 40000]).unwrap();
        let img: Image<f64> = load_image(&path, Some((31000.0, 35000.0))).unwrap();
        assert_eq!(img.pixels(), &[0.0, 255.0, 255.0]);
    }

    #[test]
    fn png_gray_loads_and_color_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let gray_path = dir.path().join("g.png");
        let gray = image::GrayImage::from_raw(3, 2, vec![0, 10, 20, 30, 40, 50]).unwrap();
        gray.save(&gray_path).unwrap();
        let img: Image<f64> = load_image(&gray_path, None).unwrap();
        assert_eq!(img.height(), 2);
        assert_eq!(img.width(), 3);
        assert_eq!(img.get(1, 2), 50.0);

        let rgb_path = dir.path().join("c.png");
        let rgb = image::RgbImage::from_raw(1, 1, vec![1, 2, 3]).unwrap();
        rgb.save(&rgb_path).unwrap();
        let err = load_image::<f64>(&rgb_path, None).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn truncated_pgm_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\n\x00\x01").unwrap();
        assert!(matches!(load_image::<f64>(&path, None), Err(Error::Format { .. })));
    }

    #[test]
    fn resize_identity_and_constant_preservation() {
        let img = Image::from_pixels(3, 4, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(img.resized(3, 4), img);

        let flat = Image::constant(5, 7, 42.0f64);
        let shrunk = flat.resized(3, 3);
        for &p in shrunk.pixels() {
            assert!((p - 42.0).abs() < 1e-12);
        }
        let grown = flat.resized(11, 13);
        for &p in grown.pixels() {
            assert!((p - 42.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resize_preserves_linear_ramps_interiorly() {
        // Bilinear interpolation reproduces affine signals away from the
        // clamped border taps.
        let img = Image::from_pixels(4, 8, (0..32).map(|i| f64::from(i % 8)).collect()).unwrap();
        let wide = img.resized(4, 16);
        for r in 0..4 {
            for c in 2..14 {
                let expect = (c as f64 + 0.5) * 0.5 - 0.5;
                assert!(
                    (wide.get(r, c) - expect).abs() < 1e-9,
                    "({r},{c}): {} vs {expect}",
                    wide.get(r, c)
                );
            }
        }
    }
}
