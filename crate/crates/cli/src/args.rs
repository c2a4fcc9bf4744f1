//! Command-line grammar. Every tunable is optional here; defaults are
//! resolved against the optional TOML config (flags win) in each command.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "lskdet",
    version,
    about = "Pedestrian detection in thermal imagery with steering-kernel tensors"
)]
pub struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for per-image parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Chattier progress and diagnostics on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic blob dataset with exact annotations.
    Synth(SynthArgs),
    /// Train a detector from an annotation file (two rounds with mining).
    Train(TrainArgs),
    /// Run multiscale detection over images.
    Detect(DetectArgs),
    /// Score detections against annotations (miss rate / FPPI).
    Eval(EvalArgs),
    /// Time the frequency-domain path against the sliding-window path.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Training frames to generate.
    #[arg(long)]
    pub train: Option<usize>,
    /// Held-out test frames to generate.
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Gaussian pixel noise (grey levels).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Bright non-pedestrian shapes per frame.
    #[arg(long)]
    pub clutter: Option<usize>,
    /// Smallest blob height in pixels.
    #[arg(long)]
    pub blob_min: Option<u32>,
    /// Largest blob height in pixels.
    #[arg(long)]
    pub blob_max: Option<u32>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Annotation file; image paths inside resolve relative to it.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the pre-mining round-one model here.
    #[arg(long)]
    pub emit_initial: Option<PathBuf>,
    /// Cost parameter: a number, or `auto` for a cross-validated grid.
    #[arg(long)]
    pub cost: Option<String>,
    /// Steering regularization exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Descriptor window size (odd).
    #[arg(long)]
    pub window: Option<usize>,
    /// Spectrum energy fraction the decorrelation must exceed.
    #[arg(long)]
    pub energy: Option<f64>,
    /// Detector extent as ROWSxCOLS, e.g. 40x20.
    #[arg(long)]
    pub detector: Option<String>,
    /// Comma-separated scale ladder, e.g. 2.0,1.5,1.0.
    #[arg(long)]
    pub scales: Option<String>,
    /// Folds for `--cost auto` cross-validation.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Random negative windows per image.
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Mining budget as a multiple of the positive count.
    #[arg(long)]
    pub mining_factor: Option<f64>,
    /// Detection threshold stored in the model.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Solver tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Solver update budget.
    #[arg(long)]
    pub max_passes: Option<usize>,
    /// Linear 16-bit rescale window as LO,HI (e.g. 31000,35000).
    #[arg(long)]
    pub rescale: Option<String>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Image directory, or an annotation file whose image list is used.
    #[arg(long)]
    pub images: PathBuf,
    /// Detections output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the model's score threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Dump per-level and fused score maps as PGMs into this directory.
    #[arg(long)]
    pub dump_maps: Option<PathBuf>,
    /// Linear 16-bit rescale window as LO,HI.
    #[arg(long)]
    pub rescale: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Detections file produced by `detect`.
    #[arg(long)]
    pub detections: PathBuf,
    /// Annotation file naming the evaluated images.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Curve CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also report per-fold miss rates over a round-robin split.
    #[arg(long)]
    pub folds: Option<usize>,
    /// FPPI at which the summary miss rate is read (default 0.1).
    #[arg(long)]
    pub fppi: Option<f64>,
    /// Ignore truth boxes shorter than this many pixels; detections on
    /// them are discarded instead of counted as false positives.
    #[arg(long)]
    pub min_height: Option<u32>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Target extent as ROWSxCOLS (default 240x360).
    #[arg(long)]
    pub target: Option<String>,
    /// Detector extent as ROWSxCOLS (default 36x28).
    #[arg(long)]
    pub detector: Option<String>,
    /// Feature channels (default 3).
    #[arg(long)]
    pub channels: Option<usize>,
    /// Timing repetitions; the minimum is reported (default 3).
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Also time a tiny 16x16 case where the naive path may win.
    #[arg(long)]
    pub tiny: bool,
}
