//! Seed-aggregated series for plotting, one CSV per metric.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::sweep::{read_sweep_csv, SweepRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Entropy,
    Jitter,
    /// Normalized hit ratio.
    HitRatio,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Entropy, Metric::Jitter, Metric::HitRatio];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Entropy => "entropy",
            Metric::Jitter => "jitter",
            Metric::HitRatio => "hit_ratio",
        }
    }

    pub fn of(self, row: &SweepRow) -> f64 {
        match self {
            Metric::Entropy => row.entropy,
            Metric::Jitter => row.jitter,
            Metric::HitRatio => row.hit_norm,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            precache_core::Error::invalid(format!(
                "unknown metric `{s}` (expected entropy, jitter or hit_ratio)"
            ))
            .into()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sweep_value: f64,
    pub strategy: String,
    pub mean: f64,
    /// Sample standard deviation over seeds; 0 for a single seed.
    pub stddev: f64,
}

/// Mean and spread over seeds for every (sweep value, strategy) pair, in
/// order of first appearance.
pub fn aggregate(rows: &[SweepRow], metric: Metric) -> Vec<Aggregate> {
    let mut groups: Vec<(f64, &str, Vec<f64>)> = Vec::new();
    for r in rows {
        let v = metric.of(r);
        match groups
            .iter_mut()
            .find(|(s, name, _)| *s == r.sweep_value && *name == r.strategy)
        {
            Some(g) => g.2.push(v),
            None => groups.push((r.sweep_value, &r.strategy, vec![v])),
        }
    }
    groups
        .into_iter()
        .map(|(sweep_value, strategy, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let stddev = if values.len() < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            Aggregate {
                sweep_value,
                strategy: strategy.to_string(),
                mean,
                stddev,
            }
        })
        .collect()
}

/// Reads `sweep.csv` from an output directory and writes
/// `plot_<metric>.csv` next to it.
pub fn emit_plotdata(dir: &Path, metric: Metric) -> Result<PathBuf> {
    let rows = read_sweep_csv(&dir.join("sweep.csv"))?;
    let path = dir.join(format!("plot_{metric}.csv"));
    let artifact = |e: csv::Error| CliError::Artifact {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(artifact)?;
    for a in aggregate(&rows, metric) {
        w.serialize(a).map_err(artifact)?;
    }
    w.flush().map_err(CliError::io(&path))?;
    Ok(path)
}
