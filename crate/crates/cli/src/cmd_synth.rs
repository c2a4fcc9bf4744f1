//! `lskdet synth`: render the synthetic blob dataset to disk as 8-bit
//! PGMs plus annotation files, split into train/ and test/.

use std::path::Path;

use lskdet_core::formats::{write_annotations, Annotations};
use lskdet_core::image::AnnotatedFrame;
use lskdet_core::synth::{generate, SynthConfig};
use lskdet_core::{Error, Result};

use crate::args::SynthArgs;
use crate::config::FileConfig;

pub fn run(args: &SynthArgs, cfg: &FileConfig, seed: u64) -> Result<()> {
    let d = SynthConfig::default();
    let sc = SynthConfig {
        train_frames: args.train.or(cfg.train_frames).unwrap_or(d.train_frames),
        test_frames: args.test.or(cfg.test_frames).unwrap_or(d.test_frames),
        height: args.height.or(cfg.height).unwrap_or(d.height),
        width: args.width.or(cfg.width).unwrap_or(d.width),
        blob_h: (
            args.blob_min.or(cfg.blob_min).unwrap_or(d.blob_h.0),
            args.blob_max.or(cfg.blob_max).unwrap_or(d.blob_h.1),
        ),
        noise: args.noise.or(cfg.noise).unwrap_or(d.noise),
        clutter: args.clutter.or(cfg.clutter).unwrap_or(d.clutter),
        seed,
        ..d
    };

    let data = generate::<f64>(&sc)?;
    let train_boxes = write_split(&args.out, "train", &data.train)?;
    let test_boxes = write_split(&args.out, "test", &data.test)?;

    println!(
        "wrote {} train frames ({} boxes) and {} test frames ({} boxes) under {}",
        data.train.len(),
        train_boxes,
        data.test.len(),
        test_boxes,
        args.out.display()
    );
    println!(
        "frames are {}x{} px, blobs {}..{} px tall, seed {}",
        sc.height, sc.width, sc.blob_h.0, sc.blob_h.1, sc.seed
    );
    Ok(())
}

fn write_split(out: &Path, name: &str, frames: &[AnnotatedFrame<f64>]) -> Result<usize> {
    let dir = out.join(name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut ann = Annotations::default();
    for (i, frame) in frames.iter().enumerate() {
        let id = format!("{name}/frame_{i:04}.pgm");
        frame.image.save_pgm(out.join(&id))?;
        for b in &frame.truths {
            ann.push(&id, *b);
        }
    }
    write_annotations(out.join(format!("{name}.txt")), &ann)?;
    Ok(ann.total_boxes())
}
