//! `lskdet train`: build the training set from an annotation file, pick
//! the cost parameter (fixed or cross-validated), run both training
//! rounds, and write the refined model.

use std::time::Instant;

use lskdet_core::synth::{default_scales, DETECTOR_SHAPE};
use lskdet_core::train::{build_training_set, select_cost, train_rounds, TrainOptions, TrainRound};
use lskdet_core::Result;

use crate::args::TrainArgs;
use crate::config::{
    parse_cost, parse_extent, parse_scales, resolve_rescale, validate_scales, CostSpec, FileConfig,
};
use crate::dataset;

const COST_GRID: [f64; 3] = [0.1, 1.0, 10.0];

pub fn run(args: &TrainArgs, cfg: &FileConfig, seed: u64, verbose: bool) -> Result<()> {
    let started = Instant::now();
    let rescale = resolve_rescale(args.rescale.as_deref(), cfg)?;
    let (_ids, frames) = dataset::load_annotated(&args.annotations, rescale)?;
    println!("loaded {} annotated images", frames.len());

    let detector = match args.detector.as_deref().or(cfg.detector.as_deref()) {
        Some(s) => parse_extent(s)?,
        None => DETECTOR_SHAPE,
    };
    let scales = match (args.scales.as_deref(), cfg.scales.as_ref()) {
        (Some(s), _) => parse_scales(s)?,
        (None, Some(v)) => {
            validate_scales(v)?;
            v.clone()
        }
        (None, None) => default_scales(),
    };

    let mut opts = TrainOptions::new(detector, scales);
    opts.seed = seed;
    if let Some(w) = args.window.or(cfg.window) {
        opts.lsk.window_size = w;
    }
    if let Some(a) = args.alpha.or(cfg.alpha) {
        opts.lsk.alpha = a;
    }
    opts.lsk.validate()?;
    if let Some(e) = args.energy.or(cfg.energy) {
        opts.energy_target = e;
    }
    if let Some(n) = args.negatives.or(cfg.negatives) {
        opts.negatives_per_image = n;
    }
    if let Some(m) = args.mining_factor.or(cfg.mining_factor) {
        opts.mining_budget_factor = m;
    }
    if let Some(t) = args.threshold.or(cfg.threshold) {
        opts.threshold = t;
    }
    if let Some(t) = args.tolerance.or(cfg.tolerance) {
        opts.solver.tolerance = t;
    }
    if let Some(p) = args.max_passes.or(cfg.max_passes) {
        opts.solver.max_passes = p;
    }
    let cost = match args.cost.as_deref().or(cfg.cost.as_deref()) {
        Some(s) => parse_cost(s)?,
        None => CostSpec::Fixed(opts.solver.c),
    };

    let (set, basis, stats) = build_training_set(&frames, &opts)?;
    println!(
        "training set: {} positives, {} negatives ({} undersized truths skipped)",
        stats.positives, stats.negatives, stats.skipped
    );
    println!(
        "decorrelation: {} -> {} channels at energy target {}",
        basis.l, basis.d, opts.energy_target
    );

    match cost {
        CostSpec::Fixed(c) => opts.solver.c = c,
        CostSpec::Auto => {
            let k = args.folds.or(cfg.folds).unwrap_or(3);
            let grid: Vec<f64> = COST_GRID.to_vec();
            let sel = select_cost(&set, &grid, k, &opts.solver)?;
            println!("cost search over {k} round-robin folds (fold i takes indices i, i+{k}, i+2*{k}, ...):");
            for (i, fold) in sel.folds.iter().enumerate() {
                if verbose {
                    let ids: Vec<String> = fold.iter().map(|j| j.to_string()).collect();
                    println!("  fold {i}: {} examples [{}]", fold.len(), ids.join(","));
                } else {
                    println!("  fold {i}: {} examples", fold.len());
                }
            }
            for (c, correct, total) in &sel.grid {
                println!("  C = {c}: {correct}/{total} held-out examples correct");
            }
            println!("selected C = {}", sel.cost);
            opts.solver.c = sel.cost;
        }
    }

    let outcome = train_rounds(set, basis, stats, &frames, &opts)?;
    report_round("round 1 (random negatives)", &outcome.initial);
    println!("mined {} hard negatives", outcome.mined);
    report_round("round 2 (with mined negatives)", &outcome.refined);

    if let Some(path) = &args.emit_initial {
        outcome.initial.model.save(path)?;
        println!("round-1 model written to {}", path.display());
    }
    outcome.refined.model.save(&args.out)?;
    println!("model written to {}", args.out.display());
    println!("total time {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn report_round(name: &str, round: &TrainRound<f64>) {
    let q = round.solution.support.len();
    let n = round.examples;
    println!(
        "{name}: {n} examples, {q} support tensors ({:.1}% of set)",
        100.0 * q as f64 / n as f64
    );
    println!(
        "  solver: {} iterations, gap {:.3e}, objective {:.6}, bias {:.6}",
        round.solution.iterations, round.solution.final_gap, round.solution.objective, round.model.bias
    );
}
