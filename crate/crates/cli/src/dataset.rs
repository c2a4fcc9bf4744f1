//! Dataset access shared by the commands: annotation-driven image loading
//! and directory listings. Image paths in an annotation file resolve
//! relative to the file's own directory.

use std::path::{Path, PathBuf};

use lskdet_core::formats::{read_annotations, Annotations};
use lskdet_core::image::{load_image, AnnotatedFrame};
use lskdet_core::{Error, Result};
use rayon::prelude::*;

fn base_dir(annotation_path: &Path) -> PathBuf {
    annotation_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Load every image named by an annotation file, in file order.
/// Returns the image ids exactly as written alongside the loaded frames.
pub fn load_annotated(
    path: &Path,
    rescale: Option<(f64, f64)>,
) -> Result<(Vec<String>, Vec<AnnotatedFrame<f64>>)> {
    let ann = read_annotations(path)?;
    let base = base_dir(path);
    let frames: Vec<AnnotatedFrame<f64>> = ann
        .entries
        .par_iter()
        .map(|(id, boxes)| {
            let image = load_image(&base.join(id), rescale)?;
            Ok(AnnotatedFrame {
                image,
                truths: boxes.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let ids = ann.entries.into_iter().map(|(id, _)| id).collect();
    Ok((ids, frames))
}

/// Resolve `--images`: a directory yields its image files sorted by name;
/// an annotation file yields its image list in file order. The returned
/// ids are joined onto the base directory to open each file.
pub fn list_images(path: &Path) -> Result<(PathBuf, Vec<String>)> {
    if path.is_dir() {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let lower = name.to_ascii_lowercase();
            if lower.ends_with(".pgm") || lower.ends_with(".png") {
                ids.push(name.to_string());
            }
        }
        if ids.is_empty() {
            return Err(Error::Validation(format!(
                "no .pgm or .png images under {}",
                path.display()
            )));
        }
        ids.sort();
        Ok((path.to_path_buf(), ids))
    } else {
        let ann = read_annotations(path)?;
        let ids = ann.entries.into_iter().map(|(id, _)| id).collect();
        Ok((base_dir(path), ids))
    }
}

/// Index detections-by-image against an annotation file, preserving the
/// annotation order. Detections naming unknown images are an error: the
/// two files must describe the same image set.
pub fn group_by_annotation<D>(
    ann: &Annotations,
    detections: Vec<(String, D)>,
) -> Result<Vec<Vec<D>>> {
    let mut index = std::collections::HashMap::new();
    for (i, (id, _)) in ann.entries.iter().enumerate() {
        index.insert(id.as_str(), i);
    }
    let mut grouped: Vec<Vec<D>> = ann.entries.iter().map(|_| Vec::new()).collect();
    for (id, det) in detections {
        let Some(&i) = index.get(id.as_str()) else {
            return Err(Error::Validation(format!(
                "detections name image {id:?} absent from the annotation file"
            )));
        };
        grouped[i].push(det);
    }
    Ok(grouped)
}
