//! `lskdet bench`: time the frequency-domain scorer against the direct
//! sliding window on seeded random tensors, and report the honest ratio
//! (which drops below 1 for tiny targets).

use std::time::{Duration, Instant};

use lskdet_core::fft::{naive_slide, prepare, score_map};
use lskdet_core::tensor::Tensor3;
use lskdet_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::BenchArgs;
use crate::config::{parse_extent, FileConfig};

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub target: (usize, usize),
    pub detector: (usize, usize),
    pub channels: usize,
    pub repeats: usize,
    pub prepare: Duration,
    pub fft: Duration,
    pub naive: Duration,
    /// Largest |fft - naive| over valid positions, as a cross-check that
    /// both timed paths computed the same thing.
    pub max_difference: f64,
}

impl BenchReport {
    /// Sliding-window time divided by frequency-path time (per image,
    /// excluding one-time preparation).
    pub fn speedup(&self) -> f64 {
        self.naive.as_secs_f64() / self.fft.as_secs_f64()
    }
}

fn random_tensor(m: usize, n: usize, d: usize, rng: &mut ChaCha8Rng) -> Tensor3<f64> {
    let data: Vec<f64> = (0..m * n * d).map(|_| rng.gen::<f64>()).collect();
    Tensor3::from_vec(m, n, d, data).expect("sized to shape")
}

/// Time both scoring paths on one random target/detector pair. The
/// minimum over `repeats` runs is reported for each path.
pub fn measure(
    target: (usize, usize),
    detector: (usize, usize),
    channels: usize,
    repeats: usize,
    seed: u64,
) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::Validation("bench needs at least one repeat".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_tensor(target.0, target.1, channels, &mut rng);
    let template = random_tensor(detector.0, detector.1, channels, &mut rng).normalized()?;
    let bias = 0.25;

    let start = Instant::now();
    let det = prepare(&template, bias, target)?;
    let prepare_time = start.elapsed();

    let mut fft_time = Duration::MAX;
    let mut fft_map = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let map = score_map(&f, &det, 1.0)?;
        fft_time = fft_time.min(start.elapsed());
        fft_map = Some(map);
    }
    let mut naive_time = Duration::MAX;
    let mut naive_map = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let map = naive_slide(&f, &template, bias, 1.0)?;
        naive_time = naive_time.min(start.elapsed());
        naive_map = Some(map);
    }

    let (fft_map, naive_map) = (fft_map.unwrap(), naive_map.unwrap());
    let (vh, vw) = (fft_map.valid_region().h as usize, fft_map.valid_region().w as usize);
    let mut max_difference = 0.0f64;
    for r in 0..vh {
        for c in 0..vw {
            if fft_map.is_valid(r, c) && naive_map.is_valid(r, c) {
                max_difference =
                    max_difference.max((fft_map.score(r, c) - naive_map.score(r, c)).abs());
            }
        }
    }

    Ok(BenchReport {
        target,
        detector,
        channels,
        repeats,
        prepare: prepare_time,
        fft: fft_time,
        naive: naive_time,
        max_difference,
    })
}

fn print_report(report: &BenchReport) {
    println!(
        "target {}x{}, detector {}x{}, {} channels, best of {}",
        report.target.0,
        report.target.1,
        report.detector.0,
        report.detector.1,
        report.channels,
        report.repeats
    );
    println!("  prepare (one-time): {:>10.3} ms", report.prepare.as_secs_f64() * 1e3);
    println!("  frequency path:     {:>10.3} ms / image", report.fft.as_secs_f64() * 1e3);
    println!("  sliding window:     {:>10.3} ms / image", report.naive.as_secs_f64() * 1e3);
    println!("  agreement: max |difference| = {:.3e}", report.max_difference);
    let speedup = report.speedup();
    if speedup >= 1.0 {
        println!("  speedup: {speedup:.2}x");
    } else {
        println!(
            "  speedup: {speedup:.2}x (the sliding window wins at this size)"
        );
    }
}

pub fn run(args: &BenchArgs, cfg: &FileConfig, seed: u64) -> Result<()> {
    let target = match args.target.as_deref().or(cfg.target.as_deref()) {
        Some(s) => parse_extent(s)?,
        None => (240, 360),
    };
    let detector = match args.detector.as_deref().or(cfg.detector.as_deref()) {
        Some(s) => parse_extent(s)?,
        None => (36, 28),
    };
    let channels = args.channels.or(cfg.channels).unwrap_or(3);
    let repeats = args.repeats.or(cfg.repeats).unwrap_or(3);

    let report = measure(target, detector, channels, repeats, seed)?;
    print_report(&report);

    if args.tiny {
        let tiny = measure((16, 16), (8, 6), channels, repeats, seed)?;
        print_report(&tiny);
    }
    Ok(())
}
