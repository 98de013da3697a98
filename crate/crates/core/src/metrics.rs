//! Evaluation of cache decisions: highlight entropy, skipped-segment count,
//! objective jitter and cache hit ratio.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popularity::{PopularitySeries, VideoCatalog};

/// Stand-in denominator when no popularity mass is left uncached.
pub const SATURATION_EPSILON: f64 = 1e-12;

/// Inclusive chunk interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub end: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Per-chunk cache vector of one video. Runs are the maximal stretches of
/// cached chunks and are always derived from the vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheDecision {
    video_id: usize,
    cached: Vec<bool>,
}

impl CacheDecision {
    pub fn empty(video_id: usize, len: usize) -> Self {
        Self {
            video_id,
            cached: vec![false; len],
        }
    }

    pub fn from_bits(video_id: usize, cached: Vec<bool>) -> Self {
        Self { video_id, cached }
    }

    pub fn from_chunks(video_id: usize, len: usize, chunks: &[usize]) -> Result<Self> {
        let mut d = Self::empty(video_id, len);
        for &c in chunks {
            if c >= len {
                return Err(Error::invalid(format!("chunk {c} outside video of {len} chunks")));
            }
            d.cached[c] = true;
        }
        Ok(d)
    }

    /// Rebuilds a decision from inclusive runs.
    pub fn from_runs(video_id: usize, len: usize, runs: &[Run]) -> Result<Self> {
        let mut d = Self::empty(video_id, len);
        for r in runs {
            if r.start > r.end || r.end >= len {
                return Err(Error::invalid(format!(
                    "run {}..={} invalid for video of {len} chunks",
                    r.start, r.end
                )));
            }
            d.cached[r.start..=r.end].iter_mut().for_each(|c| *c = true);
        }
        Ok(d)
    }

    pub fn video_id(&self) -> usize {
        self.video_id
    }

    pub fn len(&self) -> usize {
        self.cached.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cached.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.cached
    }

    pub fn is_cached(&self, chunk: usize) -> bool {
        self.cached[chunk]
    }

    pub fn set(&mut self, chunk: usize, cached: bool) {
        self.cached[chunk] = cached;
    }

    pub fn cached_count(&self) -> usize {
        self.cached.iter().filter(|&&c| c).count()
    }

    pub fn cached_chunks(&self) -> impl Iterator<Item = usize> + '_ {
        self.cached.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i)
    }

    pub fn runs(&self) -> Vec<Run> {
        stretches(&self.cached, true)
    }

    /// Maximal uncached stretches, including leading and trailing ones.
    pub fn gaps(&self) -> Vec<Run> {
        stretches(&self.cached, false)
    }
}

fn stretches(bits: &[bool], state: bool) -> Vec<Run> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().enumerate() {
        match (b == state, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Run { start: s, end: i - 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Run {
            start: s,
            end: bits.len() - 1,
        });
    }
    out
}

/// Number of maximal uncached gaps; an empty cache counts as one gap and a
/// full cache as none.
pub fn skipped_count(decision: &CacheDecision) -> usize {
    decision.gaps().len()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entropy {
    pub value: f64,
    /// No popularity mass left uncached; the denominator was replaced by
    /// [`SATURATION_EPSILON`].
    pub saturated: bool,
}

/// Highlight entropy of one video:
/// `p / N · sqrt(Σ_runs (Σ_{x∈run} y)² / Σ_{x uncached} y²)`.
pub fn highlight_entropy(
    decision: &CacheDecision,
    series: &PopularitySeries,
    weight: f64,
) -> Result<Entropy> {
    check_lengths(decision, series)?;
    let y = series.values();
    let mut numerator = 0.0;
    let mut run_sum = 0.0;
    let mut denominator = 0.0;
    let mut gaps = 0usize;
    let mut prev = true;
    for (&cached, &v) in decision.bits().iter().zip(y) {
        if cached {
            run_sum += v;
        } else {
            if prev {
                gaps += 1;
            }
            numerator += run_sum * run_sum;
            run_sum = 0.0;
            denominator += v * v;
        }
        prev = cached;
    }
    numerator += run_sum * run_sum;
    if numerator == 0.0 {
        return Ok(Entropy {
            value: 0.0,
            saturated: false,
        });
    }
    let saturated = denominator < SATURATION_EPSILON;
    let ratio = numerator / denominator.max(SATURATION_EPSILON);
    Ok(Entropy {
        value: weight / gaps.max(1) as f64 * ratio.sqrt(),
        saturated,
    })
}

/// Mean length of gaps lying strictly between two cached runs, divided by the
/// video length.
pub fn objective_jitter(decision: &CacheDecision) -> f64 {
    let n = decision.len();
    let interior: Vec<Run> = decision
        .gaps()
        .into_iter()
        .filter(|g| g.start > 0 && g.end + 1 < n)
        .collect();
    if interior.is_empty() {
        return 0.0;
    }
    let mean = interior.iter().map(Run::len).sum::<usize>() as f64 / interior.len() as f64;
    mean / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRatio {
    /// Popularity mass of the cached chunks.
    pub raw: f64,
    /// `raw` over the video's total popularity mass.
    pub normalized: f64,
    /// The video carries no popularity at all; `normalized` is reported as 0.
    pub degenerate: bool,
}

pub fn cache_hit_ratio(decision: &CacheDecision, series: &PopularitySeries) -> Result<HitRatio> {
    check_lengths(decision, series)?;
    let y = series.values();
    let raw = decision.cached_chunks().fold(0.0, |acc, x| acc + y[x]);
    let total: f64 = y.iter().sum();
    Ok(if total > 0.0 {
        HitRatio {
            raw,
            normalized: raw / total,
            degenerate: false,
        }
    } else {
        HitRatio {
            raw,
            normalized: 0.0,
            degenerate: true,
        }
    })
}

fn check_lengths(decision: &CacheDecision, series: &PopularitySeries) -> Result<()> {
    if decision.len() != series.len() {
        return Err(Error::invalid(format!(
            "decision for video {} covers {} chunks but series has {}",
            decision.video_id(),
            decision.len(),
            series.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoReport {
    pub video: usize,
    pub entropy: f64,
    pub saturated: bool,
    pub skipped: usize,
    pub jitter: f64,
    pub hit_raw: f64,
    pub hit_norm: f64,
    pub cached_chunks: usize,
    pub cached_bytes: u64,
}

/// Metrics of one strategy run over a whole catalog.
///
/// `mean_jitter` averages over videos with at least one cached chunk (an
/// unwatched video has no viewing jitter); hit ratios average over every
/// video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_video: Vec<VideoReport>,
    pub total_entropy: f64,
    pub mean_jitter: f64,
    pub mean_hit_raw: f64,
    pub mean_hit_norm: f64,
    pub cached_bytes: u64,
}

impl EvalReport {
    pub fn from_rows(per_video: Vec<VideoReport>) -> Self {
        let count = per_video.len().max(1) as f64;
        let viewed: Vec<&VideoReport> = per_video.iter().filter(|r| r.cached_chunks > 0).collect();
        let mean_jitter = if viewed.is_empty() {
            0.0
        } else {
            viewed.iter().map(|r| r.jitter).sum::<f64>() / viewed.len() as f64
        };
        Self {
            total_entropy: per_video.iter().map(|r| r.entropy).sum(),
            mean_jitter,
            mean_hit_raw: per_video.iter().map(|r| r.hit_raw).sum::<f64>() / count,
            mean_hit_norm: per_video.iter().map(|r| r.hit_norm).sum::<f64>() / count,
            cached_bytes: per_video.iter().map(|r| r.cached_bytes).sum(),
            per_video,
        }
    }

    /// Per-video rows with header `video,entropy,skipped,jitter,hit_raw,hit_norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("video,entropy,skipped,jitter,hit_raw,hit_norm\n");
        for r in &self.per_video {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.video, r.entropy, r.skipped, r.jitter, r.hit_raw, r.hit_norm
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Evaluates one decision per catalog video, in catalog order.
pub fn evaluate(
    catalog: &VideoCatalog,
    series: &[PopularitySeries],
    decisions: &[CacheDecision],
) -> Result<EvalReport> {
    if series.len() != catalog.len() || decisions.len() != catalog.len() {
        return Err(Error::invalid(format!(
            "catalog has {} videos but got {} series and {} decisions",
            catalog.len(),
            series.len(),
            decisions.len()
        )));
    }
    let rows = catalog
        .videos()
        .iter()
        .zip(series)
        .zip(decisions)
        .map(|((meta, s), d)| {
            let entropy = highlight_entropy(d, s, meta.zipf_weight)?;
            let hit = cache_hit_ratio(d, s)?;
            let cached = d.cached_count();
            Ok(VideoReport {
                video: meta.id,
                entropy: entropy.value,
                saturated: entropy.saturated,
                skipped: skipped_count(d),
                jitter: objective_jitter(d),
                hit_raw: hit.raw,
                hit_norm: hit.normalized,
                cached_chunks: cached,
                cached_bytes: cached as u64 * meta.chunk_size,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(rows))
}
