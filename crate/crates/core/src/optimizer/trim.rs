//! Highlight-direction trimming.
//!
//! Each video starts from the peak of its most popular candidate segment.
//! Afterwards its frontier holds the chunks adjacent to every highlight run
//! grown so far (restricted to the run's own segment) plus the seed of the
//! next segment in descending peak popularity. Each iteration commits the
//! single frontier move, over all videos, with the largest gain in total
//! highlight entropy; the loop ends when no move fits the remaining budget
//! or the best gain is negative.

use serde::{Deserialize, Serialize};

use super::{Problem, StrategyKind, StrategyResult};
use crate::error::{Error, Result};
use crate::metrics::{highlight_entropy, CacheDecision};
use crate::popularity::{PopularitySeries, VideoMeta};
use crate::wavelet::Segmentation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    /// Grow an existing highlight run by one adjacent chunk.
    Extend,
    /// Open the next candidate segment at its seed.
    NewSeed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub video: usize,
    pub chunk: usize,
    pub kind: MoveKind,
}

#[derive(Clone, Debug)]
pub struct TrimOutcome {
    pub result: StrategyResult,
    /// Frontier of every video at termination, in catalog order.
    pub frontier: Vec<Vec<Move>>,
    /// Total objective after each committed move, starting with the empty cache.
    pub objective_trace: Vec<f64>,
    pub moves: Vec<Move>,
}

struct VideoTrim<'a> {
    meta: &'a VideoMeta,
    series: &'a PopularitySeries,
    segmentation: &'a Segmentation,
    /// Segment indices by descending seed popularity, lowest chunk first on ties.
    order: Vec<usize>,
    opened: usize,
    decision: CacheDecision,
    entropy: f64,
    /// Best (gain, move) among the current frontier; `None` when the frontier is empty.
    best: Option<(f64, Move)>,
}

impl<'a> VideoTrim<'a> {
    fn new(meta: &'a VideoMeta, series: &'a PopularitySeries, segmentation: &'a Segmentation) -> Self {
        let y = series.values();
        let mut order: Vec<usize> = (0..segmentation.segments.len()).collect();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (segmentation.segments[a].seed, segmentation.segments[b].seed);
            y[sb].total_cmp(&y[sa]).then(sa.cmp(&sb))
        });
        Self {
            meta,
            series,
            segmentation,
            order,
            opened: 0,
            decision: CacheDecision::empty(meta.id, meta.chunk_count),
            entropy: 0.0,
            best: None,
        }
    }

    fn frontier(&self) -> Vec<Move> {
        let mut out = Vec::new();
        for &k in &self.order[..self.opened] {
            let seg = self.segmentation.segments[k];
            let (mut lo, mut hi) = (seg.seed, seg.seed);
            while lo > seg.start && self.decision.is_cached(lo - 1) {
                lo -= 1;
            }
            while hi < seg.end && self.decision.is_cached(hi + 1) {
                hi += 1;
            }
            if lo > seg.start {
                out.push(self.extend(lo - 1));
            }
            if hi < seg.end {
                out.push(self.extend(hi + 1));
            }
        }
        if let Some(&k) = self.order.get(self.opened) {
            out.push(Move {
                video: self.meta.id,
                chunk: self.segmentation.segments[k].seed,
                kind: MoveKind::NewSeed,
            });
        }
        out.sort_by_key(|m| m.chunk);
        out.dedup_by_key(|m| m.chunk);
        out
    }

    fn extend(&self, chunk: usize) -> Move {
        Move {
            video: self.meta.id,
            chunk,
            kind: MoveKind::Extend,
        }
    }

    fn entropy_with(&self, chunk: usize) -> Result<f64> {
        let mut trial = self.decision.clone();
        trial.set(chunk, true);
        Ok(highlight_entropy(&trial, self.series, self.meta.zipf_weight)?.value)
    }

    fn refresh_best(&mut self) -> Result<()> {
        let mut best: Option<(f64, Move)> = None;
        for m in self.frontier() {
            let gain = self.entropy_with(m.chunk)? - self.entropy;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, m));
            }
        }
        self.best = best;
        Ok(())
    }

    fn commit(&mut self, m: Move) -> Result<()> {
        self.decision.set(m.chunk, true);
        if m.kind == MoveKind::NewSeed {
            self.opened += 1;
        }
        self.entropy = highlight_entropy(&self.decision, self.series, self.meta.zipf_weight)?.value;
        self.refresh_best()
    }
}

fn check_segmentations(problem: &Problem<'_>, segmentations: &[Segmentation]) -> Result<()> {
    if segmentations.len() != problem.catalog().len() {
        return Err(Error::invalid(format!(
            "{} segmentations for {} videos",
            segmentations.len(),
            problem.catalog().len()
        )));
    }
    for (meta, seg) in problem.catalog().videos().iter().zip(segmentations) {
        let segs = &seg.segments;
        let partition = !segs.is_empty()
            && segs[0].start == 0
            && segs.last().map(|s| s.end + 1) == Some(meta.chunk_count)
            && segs.windows(2).all(|w| w[0].end + 1 == w[1].start)
            && segs.iter().all(|s| s.start <= s.seed && s.seed <= s.end);
        if seg.video_id != meta.id || !partition {
            return Err(Error::invalid(format!(
                "segmentation for video {} is not a seeded partition of its {} chunks",
                meta.id, meta.chunk_count
            )));
        }
    }
    Ok(())
}

pub fn trim(problem: &Problem<'_>, segmentations: &[Segmentation]) -> Result<StrategyResult> {
    trim_detailed(problem, segmentations).map(|o| o.result)
}

pub fn trim_detailed(problem: &Problem<'_>, segmentations: &[Segmentation]) -> Result<TrimOutcome> {
    check_segmentations(problem, segmentations)?;
    let mut videos: Vec<VideoTrim<'_>> = problem
        .catalog()
        .videos()
        .iter()
        .zip(problem.series())
        .zip(segmentations)
        .map(|((m, s), seg)| VideoTrim::new(m, s, seg))
        .collect();
    for v in &mut videos {
        v.refresh_best()?;
    }
    let mut remaining = problem.budget();
    let mut total = 0.0;
    let mut objective_trace = vec![total];
    let mut moves = Vec::new();
    loop {
        let mut chosen: Option<(f64, usize, Move)> = None;
        for (i, v) in videos.iter().enumerate() {
            if v.meta.chunk_size > remaining {
                continue;
            }
            if let Some((gain, m)) = v.best {
                if chosen.is_none_or(|(g, _, _)| gain > g) {
                    chosen = Some((gain, i, m));
                }
            }
        }
        let Some((gain, i, m)) = chosen else { break };
        if gain < 0.0 {
            break;
        }
        let v = &mut videos[i];
        total -= v.entropy;
        v.commit(m)?;
        total += v.entropy;
        remaining -= v.meta.chunk_size;
        objective_trace.push(total);
        moves.push(m);
    }
    let frontier = videos.iter().map(VideoTrim::frontier).collect();
    let decisions = videos.into_iter().map(|v| v.decision).collect();
    let result = StrategyResult::new(StrategyKind::Dhpc, problem, decisions, moves.len())?;
    Ok(TrimOutcome {
        result,
        frontier,
        objective_trace,
        moves,
    })
}
