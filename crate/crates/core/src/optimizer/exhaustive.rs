use std::cmp::Ordering;

use super::{Problem, StrategyKind, StrategyResult};
use crate::error::{Error, Result};
use crate::metrics::{highlight_entropy, CacheDecision};

/// Largest total chunk count [`brute_force`] accepts.
pub const EXHAUSTIVE_LIMIT: usize = 24;

const TIE_TOLERANCE: f64 = 1e-12;

/// Orders two chunk sets by their ascending index lists, compared
/// lexicographically (a proper prefix sorts first).
fn lexicographic(a: u32, b: u32) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    let bit = diff.trailing_zeros();
    let (with, without) = if a >> bit & 1 == 1 { (a, b) } else { (b, a) };
    // `with` sorts first iff `without` continues past `bit`; otherwise
    // `without` is a proper prefix of `with`.
    let with_first = without >> bit != 0;
    match (with == a, with_first) {
        (true, true) | (false, false) => Ordering::Less,
        _ => Ordering::Greater,
    }
}

/// Exhaustive search over every budget-feasible cache vector. Ties within a
/// relative 1e-12 go to the lexicographically smallest chunk set (flattened
/// over videos in catalog order).
pub fn brute_force(problem: &Problem<'_>) -> Result<StrategyResult> {
    let videos = problem.catalog().videos();
    let total = problem.catalog().total_chunks();
    if total > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            chunks: total,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let offsets: Vec<usize> = videos
        .iter()
        .scan(0, |acc, m| {
            let o = *acc;
            *acc += m.chunk_count;
            Some(o)
        })
        .collect();
    let mut scratch = problem.empty_decisions();
    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..(1u32 << total) {
        let mut bytes = 0u64;
        for (m, &off) in videos.iter().zip(&offsets) {
            let count = (mask >> off) & ((1u32 << m.chunk_count) - 1);
            bytes += count.count_ones() as u64 * m.chunk_size;
        }
        if bytes > problem.budget() {
            continue;
        }
        let mut score = 0.0;
        for (((m, &off), d), s) in videos
            .iter()
            .zip(&offsets)
            .zip(&mut scratch)
            .zip(problem.series())
        {
            for x in 0..m.chunk_count {
                d.set(x, mask >> (off + x) & 1 == 1);
            }
            score += highlight_entropy(d, s, m.zipf_weight)?.value;
        }
        let better = match best {
            None => true,
            Some((b, bm)) => {
                let tol = TIE_TOLERANCE * score.abs().max(b.abs());
                score > b + tol || ((score - b).abs() <= tol && lexicographic(mask, bm) == Ordering::Less)
            }
        };
        if better {
            best = Some((score, mask));
        }
    }
    let (_, mask) = best.expect("the empty cache is always feasible");
    let decisions = videos
        .iter()
        .zip(&offsets)
        .map(|(m, &off)| {
            CacheDecision::from_bits(
                m.id,
                (0..m.chunk_count).map(|x| mask >> (off + x) & 1 == 1).collect(),
            )
        })
        .collect();
    StrategyResult::new(StrategyKind::Oracle, problem, decisions, 1usize << total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::{PopularitySeries, VideoCatalog};

    fn indices(mask: u32) -> Vec<u32> {
        (0..32).filter(|b| mask >> b & 1 == 1).collect()
    }

    #[test]
    fn lexicographic_matches_index_lists() {
        for a in 0u32..64 {
            for b in 0u32..64 {
                assert_eq!(lexicographic(a, b), indices(a).cmp(&indices(b)), "{a:b} vs {b:b}");
            }
        }
    }

    #[test]
    fn dominant_peak_alone() {
        let catalog = VideoCatalog::zipf(&[4], 10, 1.0).unwrap();
        let series = vec![PopularitySeries::new(1, vec![0.8, 0.1, 0.1, 0.1]).unwrap()];
        let r = brute_force(&Problem::new(&catalog, &series, 10).unwrap()).unwrap();
        assert_eq!(r.decisions[0].cached_chunks().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn flat_pair_tie_goes_to_first_chunks() {
        let catalog = VideoCatalog::zipf(&[4], 2, 1.0).unwrap();
        let series = vec![PopularitySeries::new(1, vec![0.5; 4]).unwrap()];
        let r = brute_force(&Problem::new(&catalog, &series, 4).unwrap()).unwrap();
        assert_eq!(r.decisions[0].cached_chunks().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn refuses_large_instances() {
        let catalog = VideoCatalog::zipf(&[13, 12], 1, 1.0).unwrap();
        let series = vec![
            PopularitySeries::new(1, vec![0.5; 13]).unwrap(),
            PopularitySeries::new(2, vec![0.5; 12]).unwrap(),
        ];
        let err = brute_force(&Problem::new(&catalog, &series, 4).unwrap()).unwrap_err();
        assert!(err.to_string().contains("limit 24"));
    }
}
