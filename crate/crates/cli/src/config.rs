//! Optional TOML configuration and flag/string parsing helpers.
//!
//! Precedence everywhere: command-line flag, then config file, then the
//! built-in default.

use std::path::Path;

use lskdet_core::{Error, Result};
use serde::Deserialize;

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,

    // train
    pub cost: Option<String>,
    pub alpha: Option<f64>,
    pub window: Option<usize>,
    pub energy: Option<f64>,
    pub detector: Option<String>,
    pub scales: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub negatives: Option<usize>,
    pub mining_factor: Option<f64>,
    pub threshold: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_passes: Option<usize>,
    pub rescale: Option<Vec<f64>>,

    // synth
    pub train_frames: Option<usize>,
    pub test_frames: Option<usize>,
    pub height: Option<usize>,
    pub width: Option<usize>,
    pub noise: Option<f64>,
    pub clutter: Option<usize>,
    pub blob_min: Option<u32>,
    pub blob_max: Option<u32>,

    // eval
    pub fppi: Option<f64>,
    pub min_height: Option<u32>,

    // bench
    pub target: Option<String>,
    pub channels: Option<usize>,
    pub repeats: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Parse `ROWSxCOLS`, e.g. `40x20`.
pub fn parse_extent(s: &str) -> Result<(usize, usize)> {
    let err = || Error::Validation(format!("expected ROWSxCOLS, got {s:?}"));
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(err)?;
    let m: usize = m.trim().parse().map_err(|_| err())?;
    let n: usize = n.trim().parse().map_err(|_| err())?;
    if m == 0 || n == 0 {
        return Err(Error::Validation(format!("extent {s:?} has a zero side")));
    }
    Ok((m, n))
}

/// Parse a comma-separated scale ladder, e.g. `2.0,1.5,1.0`.
pub fn parse_scales(s: &str) -> Result<Vec<f64>> {
    let scales: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("bad scale {t:?} in {s:?}")))
        })
        .collect::<Result<_>>()?;
    validate_scales(&scales)?;
    Ok(scales)
}

pub fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::Validation("scale ladder is empty".into()));
    }
    if let Some(s) = scales.iter().find(|s| !s.is_finite() || **s <= 0.0) {
        return Err(Error::Validation(format!("scale {s} is not positive")));
    }
    Ok(())
}

/// Parse a linear rescale window `LO,HI`.
pub fn parse_rescale(s: &str) -> Result<(f64, f64)> {
    let err = || Error::Validation(format!("expected LO,HI rescale window, got {s:?}"));
    let (lo, hi) = s.split_once(',').ok_or_else(err)?;
    let lo: f64 = lo.trim().parse().map_err(|_| err())?;
    let hi: f64 = hi.trim().parse().map_err(|_| err())?;
    rescale_window(lo, hi)
}

pub fn rescale_window(lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Validation(format!(
            "rescale window [{lo}, {hi}] must be finite with LO < HI"
        )));
    }
    Ok((lo, hi))
}

/// Resolve the rescale option from flag string or config pair.
pub fn resolve_rescale(
    flag: Option<&str>,
    cfg: &FileConfig,
) -> Result<Option<(f64, f64)>> {
    if let Some(s) = flag {
        return parse_rescale(s).map(Some);
    }
    match cfg.rescale.as_deref() {
        None => Ok(None),
        Some([lo, hi]) => rescale_window(*lo, *hi).map(Some),
        Some(other) => Err(Error::Validation(format!(
            "config rescale needs exactly two values, got {}",
            other.len()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostSpec {
    Auto,
    Fixed(f64),
}

pub fn parse_cost(s: &str) -> Result<CostSpec> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(CostSpec::Auto);
    }
    let c: f64 = s
        .parse()
        .map_err(|_| Error::Validation(format!("cost must be a number or `auto`, got {s:?}")))?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Validation(format!("cost {c} must be positive")));
    }
    Ok(CostSpec::Fixed(c))
}
