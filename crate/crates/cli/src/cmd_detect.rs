//! `lskdet detect`: run the multiscale detector over a directory or an
//! annotation file's image list. Images are processed in parallel but the
//! output order always follows the input listing.

use std::path::{Path, PathBuf};

use lskdet_core::formats::{write_detections, DetectionRecord};
use lskdet_core::image::load_image;
use lskdet_core::pyramid::{build_pyramid, fuse, select_detections, FusedMap, PyramidLevel};
use lskdet_core::{Detection, Error, Model, Result};
use rayon::prelude::*;

use crate::args::DetectArgs;
use crate::config::{resolve_rescale, FileConfig};
use crate::dataset;

struct FrameOutput {
    detections: Vec<Detection>,
    maps: Option<(Vec<PyramidLevel<f64>>, FusedMap<f64>)>,
}

pub fn run(args: &DetectArgs, cfg: &FileConfig, verbose: bool) -> Result<()> {
    let mut model: Model = Model::load(&args.model)?;
    if let Some(t) = args.threshold.or(cfg.threshold) {
        model.threshold = t;
    }
    let rescale = resolve_rescale(args.rescale.as_deref(), cfg)?;
    let (base, ids) = dataset::list_images(&args.images)?;
    let dump = args.dump_maps.as_deref();
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let outputs: Vec<FrameOutput> = ids
        .par_iter()
        .map(|id| {
            let img = load_image(&base.join(id), rescale)?;
            let levels = build_pyramid(&img, &model)?;
            let fused = fuse(&levels)?;
            let detections = select_detections(&fused, &img, &model);
            Ok(FrameOutput {
                detections,
                maps: dump.map(|_| (levels, fused)),
            })
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for (id, out) in ids.iter().zip(&outputs) {
        if verbose {
            eprintln!("{id}: {} detections", out.detections.len());
        }
        for det in &out.detections {
            records.push(DetectionRecord {
                image: id.clone(),
                bbox: det.bbox,
                score: det.score,
                scale: det.scale,
            });
        }
        if let (Some(dir), Some((levels, fused))) = (dump, &out.maps) {
            dump_maps(dir, id, levels, fused)?;
        }
    }
    write_detections(&args.out, &records)?;
    println!(
        "{} detections across {} images -> {}",
        records.len(),
        ids.len(),
        args.out.display()
    );
    Ok(())
}

fn dump_maps(
    dir: &Path,
    id: &str,
    levels: &[PyramidLevel<f64>],
    fused: &FusedMap<f64>,
) -> Result<()> {
    let stem: String = id
        .trim_end_matches(".pgm")
        .trim_end_matches(".png")
        .chars()
        .map(|c| if c == '/' || c == '\\' { '_' } else { c })
        .collect();
    for (i, level) in levels.iter().enumerate() {
        let path: PathBuf = dir.join(format!("{stem}_level{i}_s{:.4}.pgm", level.scale));
        level.map.save_pgm(&path)?;
    }
    fused.save_pgm(dir.join(format!("{stem}_fused.pgm")))
}
