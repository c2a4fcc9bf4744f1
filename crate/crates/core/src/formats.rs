//! Plain-text interchange formats: annotation lists, detection lists, and
//! the evaluation CSV.
//!
//! Annotation files start with a `#lskt-ann v1` header; every following
//! non-blank, non-comment line reads `image_path x y w h` (whitespace
//! separated, so image paths must not contain whitespace). Detection
//! files carry `image_path x y w h score scale` lines with no header.
//! Scores print through `Display`, which round-trips f64 exactly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::eval::CurvePoint;
use crate::tensor::BoundingBox;
use crate::{Error, Result};

pub const ANNOTATION_HEADER: &str = "#lskt-ann v1";

/// Truth boxes grouped by image, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub entries: Vec<(String, Vec<BoundingBox>)>,
}

impl Annotations {
    pub fn push(&mut self, image: &str, bbox: BoundingBox) {
        if let Some((_, boxes)) = self.entries.iter_mut().find(|(name, _)| name == image) {
            boxes.push(bbox);
        } else {
            self.entries.push((image.to_string(), vec![bbox]));
        }
    }

    pub fn boxes_for(&self, image: &str) -> &[BoundingBox] {
        self.entries
            .iter()
            .find(|(name, _)| name == image)
            .map(|(_, b)| b.as_slice())
            .unwrap_or(&[])
    }

    pub fn total_boxes(&self) -> usize {
        self.entries.iter().map(|(_, b)| b.len()).sum()
    }
}

/// One detection attributed to an image, as exchanged through files.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image: String,
    pub bbox: BoundingBox,
    pub score: f64,
    pub scale: f64,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(
    token: Option<&str>,
    path: &Path,
    line_no: usize,
    what: &str,
) -> Result<T> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::format(path, format!("line {line_no}: bad or missing {what}")))
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Annotations> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(first) if first.trim() == ANNOTATION_HEADER => {}
        _ => {
            return Err(Error::format(
                path,
                format!("missing `{ANNOTATION_HEADER}` header"),
            ))
        }
    }
    let mut ann = Annotations::default();
    for (line_no, line) in content_lines(&text).skip_while(|&(n, _)| n == 1) {
        let mut tok = line.split_whitespace();
        let image: String = parse_field(tok.next(), path, line_no, "image path")?;
        let x: i64 = parse_field(tok.next(), path, line_no, "x")?;
        let y: i64 = parse_field(tok.next(), path, line_no, "y")?;
        let w: u32 = parse_field(tok.next(), path, line_no, "width")?;
        let h: u32 = parse_field(tok.next(), path, line_no, "height")?;
        if w == 0 || h == 0 {
            return Err(Error::format(path, format!("line {line_no}: degenerate box")));
        }
        if tok.next().is_some() {
            return Err(Error::format(path, format!("line {line_no}: trailing fields")));
        }
        ann.push(&image, BoundingBox::new(x, y, w, h));
    }
    Ok(ann)
}

pub fn write_annotations(path: impl AsRef<Path>, ann: &Annotations) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    let _ = writeln!(text, "{ANNOTATION_HEADER}");
    for (image, boxes) in &ann.entries {
        for b in boxes {
            let _ = writeln!(text, "{image} {} {} {} {}", b.x, b.y, b.w, b.h);
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let mut tok = line.split_whitespace();
        let image: String = parse_field(tok.next(), path, line_no, "image path")?;
        let x: i64 = parse_field(tok.next(), path, line_no, "x")?;
        let y: i64 = parse_field(tok.next(), path, line_no, "y")?;
        let w: u32 = parse_field(tok.next(), path, line_no, "width")?;
        let h: u32 = parse_field(tok.next(), path, line_no, "height")?;
        let score: f64 = parse_field(tok.next(), path, line_no, "score")?;
        let scale: f64 = parse_field(tok.next(), path, line_no, "scale")?;
        if !score.is_finite() || !(scale.is_finite() && scale > 0.0) {
            return Err(Error::format(path, format!("line {line_no}: non-finite fields")));
        }
        if tok.next().is_some() {
            return Err(Error::format(path, format!("line {line_no}: trailing fields")));
        }
        out.push(DetectionRecord { image, bbox: BoundingBox::new(x, y, w, h), score, scale });
    }
    Ok(out)
}

pub fn write_detections(path: impl AsRef<Path>, records: &[DetectionRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        writeln!(
            w,
            "{} {} {} {} {} {} {}",
            r.image, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h, r.score, r.scale
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_curve_csv(path: impl AsRef<Path>, points: &[CurvePoint]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("threshold,fppi,miss_rate\n");
    for p in points {
        let _ = writeln!(text, "{},{},{}", p.threshold, p.fppi, p.miss_rate);
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
