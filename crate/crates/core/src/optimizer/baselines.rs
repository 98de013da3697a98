use super::{Problem, StrategyKind, StrategyResult};
use crate::error::{Error, Result};

/// N-speed playback: chunks `0, N, 2N, ..` of each video, videos taken in
/// descending request weight (lower id first on ties), while chunks fit.
pub fn nsp(problem: &Problem<'_>, stride: usize) -> Result<StrategyResult> {
    if stride < 2 {
        return Err(Error::invalid(format!(
            "playback stride must be >= 2, got {stride}"
        )));
    }
    let videos = problem.catalog().videos();
    let mut order: Vec<usize> = (0..videos.len()).collect();
    order.sort_by(|&a, &b| {
        videos[b]
            .zipf_weight
            .total_cmp(&videos[a].zipf_weight)
            .then(a.cmp(&b))
    });
    let mut decisions = problem.empty_decisions();
    let mut remaining = problem.budget();
    let mut picked = 0;
    for i in order {
        let size = videos[i].chunk_size;
        for x in (0..videos[i].chunk_count).step_by(stride) {
            if size > remaining {
                break;
            }
            decisions[i].set(x, true);
            remaining -= size;
            picked += 1;
        }
    }
    StrategyResult::new(StrategyKind::Nsp, problem, decisions, picked)
}

/// Chunks of every video ranked by `y · p_f / z_f`, highest first; ties go
/// to the lower video id, then the lower chunk index.
pub(crate) fn value_ranking(problem: &Problem<'_>) -> Vec<(usize, usize)> {
    let videos = problem.catalog().videos();
    let mut ranked: Vec<(f64, usize, usize)> = videos
        .iter()
        .zip(problem.series())
        .enumerate()
        .flat_map(|(i, (m, s))| {
            s.values()
                .iter()
                .enumerate()
                .map(move |(x, &y)| (y * m.zipf_weight / m.chunk_size as f64, i, x))
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    ranked.into_iter().map(|(_, i, x)| (i, x)).collect()
}

/// Popularity-greedy selection, blind to continuity: caches chunks in
/// [`value_ranking`] order whenever they fit.
pub fn ahap(problem: &Problem<'_>) -> Result<StrategyResult> {
    let videos = problem.catalog().videos();
    let mut decisions = problem.empty_decisions();
    let mut remaining = problem.budget();
    let mut picked = 0;
    for (i, x) in value_ranking(problem) {
        let size = videos[i].chunk_size;
        if size <= remaining {
            decisions[i].set(x, true);
            remaining -= size;
            picked += 1;
        }
    }
    StrategyResult::new(StrategyKind::Ahap, problem, decisions, picked)
}
