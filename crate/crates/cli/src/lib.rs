//! Command-line front end for the steering-kernel pedestrian detector.
//!
//! Five subcommands cover the full loop: `synth` renders a labeled toy
//! dataset, `train` fits a two-round detector from annotations, `detect`
//! runs the multiscale scorer over images, `eval` turns detections plus
//! annotations into a miss-rate/FPPI curve, and `bench` times the
//! frequency-domain path against the direct sliding window.
//!
//! Failures map onto process exit codes by kind: I/O problems exit 2,
//! malformed inputs or bad arguments exit 3, numerical failures exit 4.

mod args;
mod cmd_bench;
mod cmd_detect;
mod cmd_eval;
mod cmd_synth;
mod cmd_train;
mod config;
mod dataset;

use clap::Parser;
use lskdet_core::Result;

pub use cmd_bench::{measure, BenchReport};

pub fn run() {
    let cli = args::Cli::parse();
    if let Err(e) = execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn execute(cli: args::Cli) -> Result<()> {
    let cfg = config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(7);
    if let Some(jobs) = cli.jobs.or(cfg.jobs) {
        // Ignore the error when a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        args::Command::Synth(a) => cmd_synth::run(&a, &cfg, seed),
        args::Command::Train(a) => cmd_train::run(&a, &cfg, seed, cli.verbose),
        args::Command::Detect(a) => cmd_detect::run(&a, &cfg, cli.verbose),
        args::Command::Eval(a) => cmd_eval::run(&a, &cfg),
        args::Command::Bench(a) => cmd_bench::run(&a, &cfg, seed),
    }
}
