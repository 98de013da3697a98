//! Chunk selection strategies under a shared byte budget.
//!
//! Every strategy returns one [`CacheDecision`] per catalog video together
//! with its metrics report. [`trim`] is the highlight-direction trimming
//! search; [`nsp`], [`ahap`] and [`ega`] are the comparison baselines and
//! [`brute_force`] is an exhaustive oracle for small instances.

mod baselines;
mod ega;
mod exhaustive;
mod trim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, highlight_entropy, CacheDecision, EvalReport};
use crate::popularity::{PopularitySeries, VideoCatalog};
use crate::wavelet::Segmentation;

pub use baselines::{ahap, nsp};
pub use ega::{ega, ega_detailed, EgaOutcome, EgaParams};
pub use exhaustive::{brute_force, EXHAUSTIVE_LIMIT};
pub use trim::{trim, trim_detailed, Move, MoveKind, TrimOutcome};

/// Catalog, popularity series and the byte budget shared by all videos.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    catalog: &'a VideoCatalog,
    series: &'a [PopularitySeries],
    budget: u64,
}

impl<'a> Problem<'a> {
    pub fn new(catalog: &'a VideoCatalog, series: &'a [PopularitySeries], budget: u64) -> Result<Self> {
        if series.len() != catalog.len() {
            return Err(Error::invalid(format!(
                "catalog has {} videos but {} series were given",
                catalog.len(),
                series.len()
            )));
        }
        for (meta, s) in catalog.videos().iter().zip(series) {
            if s.video_id() != meta.id || s.len() != meta.chunk_count {
                return Err(Error::invalid(format!(
                    "series for video {} has id {} and {} chunks, expected {} chunks",
                    meta.id,
                    s.video_id(),
                    s.len(),
                    meta.chunk_count
                )));
            }
        }
        Ok(Self {
            catalog,
            series,
            budget,
        })
    }

    pub fn catalog(&self) -> &'a VideoCatalog {
        self.catalog
    }

    pub fn series(&self) -> &'a [PopularitySeries] {
        self.series
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn empty_decisions(&self) -> Vec<CacheDecision> {
        self.catalog
            .videos()
            .iter()
            .map(|m| CacheDecision::empty(m.id, m.chunk_count))
            .collect()
    }

    /// Sum of highlight entropies over the catalog.
    pub fn objective(&self, decisions: &[CacheDecision]) -> Result<f64> {
        self.catalog
            .videos()
            .iter()
            .zip(self.series)
            .zip(decisions)
            .map(|((m, s), d)| highlight_entropy(d, s, m.zipf_weight).map(|e| e.value))
            .sum()
    }

    pub fn cached_bytes(&self, decisions: &[CacheDecision]) -> u64 {
        self.catalog
            .videos()
            .iter()
            .zip(decisions)
            .map(|(m, d)| d.cached_count() as u64 * m.chunk_size)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Dhpc,
    Nsp,
    Ahap,
    Ega,
    Oracle,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Dhpc => "dhpc",
            StrategyKind::Nsp => "nsp",
            StrategyKind::Ahap => "ahap",
            StrategyKind::Ega => "ega",
            StrategyKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dhpc" => StrategyKind::Dhpc,
            "nsp" => StrategyKind::Nsp,
            "ahap" => StrategyKind::Ahap,
            "ega" => StrategyKind::Ega,
            "oracle" => StrategyKind::Oracle,
            other => return Err(Error::invalid(format!("unknown strategy `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyResult {
    pub strategy: StrategyKind,
    pub decisions: Vec<CacheDecision>,
    pub report: EvalReport,
    pub iterations: usize,
}

impl StrategyResult {
    pub(crate) fn new(
        strategy: StrategyKind,
        problem: &Problem<'_>,
        decisions: Vec<CacheDecision>,
        iterations: usize,
    ) -> Result<Self> {
        let report = evaluate(problem.catalog, problem.series, &decisions)?;
        Ok(Self {
            strategy,
            decisions,
            report,
            iterations,
        })
    }
}

/// Structural check of a decision set against the budget and the per-video
/// cache layout. Returns one message per violation.
pub fn feasibility_violations(problem: &Problem<'_>, decisions: &[CacheDecision]) -> Vec<String> {
    let mut out = Vec::new();
    let videos = problem.catalog.videos();
    if decisions.len() != videos.len() {
        out.push(format!(
            "{} decisions for {} videos",
            decisions.len(),
            videos.len()
        ));
        return out;
    }
    for (meta, d) in videos.iter().zip(decisions) {
        if d.video_id() != meta.id {
            out.push(format!(
                "decision for video {} sits at slot {}",
                d.video_id(),
                meta.id
            ));
        }
        if d.len() != meta.chunk_count {
            out.push(format!(
                "video {}: decision covers {} chunks, video has {}",
                meta.id,
                d.len(),
                meta.chunk_count
            ));
            continue;
        }
        let runs = d.runs();
        let mut covered = vec![0u8; d.len()];
        for (i, r) in runs.iter().enumerate() {
            if r.start > r.end || r.end >= d.len() {
                out.push(format!(
                    "video {}: run {}..={} out of range",
                    meta.id, r.start, r.end
                ));
                continue;
            }
            if i > 0 && runs[i - 1].end + 1 >= r.start {
                out.push(format!(
                    "video {}: runs {} and {} touch or overlap",
                    meta.id,
                    i - 1,
                    i
                ));
            }
            for c in &mut covered[r.start..=r.end] {
                *c += 1;
            }
        }
        for (x, (&cached, &count)) in d.bits().iter().zip(&covered).enumerate() {
            if (cached && count != 1) || (!cached && count != 0) {
                out.push(format!(
                    "video {}: chunk {x} cached={cached} but lies in {count} runs",
                    meta.id
                ));
            }
        }
    }
    let bytes = problem.cached_bytes(decisions);
    if bytes > problem.budget {
        out.push(format!("cached {bytes} bytes exceeds budget {}", problem.budget));
    }
    out
}

/// Chunks outside every candidate segment of their video.
pub fn segment_violations(decisions: &[CacheDecision], segmentations: &[Segmentation]) -> Vec<String> {
    decisions
        .iter()
        .zip(segmentations)
        .flat_map(|(d, seg)| {
            d.cached_chunks()
                .filter(|&x| seg.segment_of(x).is_none())
                .map(move |x| format!("video {}: chunk {x} outside candidate segments", d.video_id()))
                .collect::<Vec<_>>()
        })
        .collect()
}
