use precache_core::metrics::{
    cache_hit_ratio, highlight_entropy, objective_jitter, skipped_count, CacheDecision,
};
use precache_core::popularity::PopularitySeries;
use proptest::prelude::*;

/// Direct evaluation of the highlight entropy from its definition: split the
/// index range into maximal same-state stretches, square each cached
/// stretch's popularity sum, and count uncached stretches as skips.
fn naive_entropy(y: &[f64], cached: &[bool], p: f64) -> f64 {
    let mut stretches: Vec<(bool, Vec<f64>)> = Vec::new();
    for (i, &c) in cached.iter().enumerate() {
        match stretches.last_mut() {
            Some((state, vals)) if *state == c => vals.push(y[i]),
            _ => stretches.push((c, vec![y[i]])),
        }
    }
    let num: f64 = stretches
        .iter()
        .filter(|(c, _)| *c)
        .map(|(_, v)| v.iter().sum::<f64>().powi(2))
        .sum();
    if num == 0.0 {
        return 0.0;
    }
    let skips = stretches.iter().filter(|(c, _)| !*c).count();
    let den: f64 = stretches
        .iter()
        .filter(|(c, _)| !*c)
        .flat_map(|(_, v)| v.iter().map(|x| x * x))
        .sum();
    p / skips.max(1) as f64 * (num / den.max(1e-12)).sqrt()
}

fn series(y: Vec<f64>) -> PopularitySeries {
    PopularitySeries::new(1, y).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

#[test]
fn hand_evaluated_example() {
    let s = series(vec![0.8, 0.1, 0.1, 0.1]);
    let d = CacheDecision::from_bits(1, vec![true, false, false, false]);
    let e = highlight_entropy(&d, &s, 1.0).unwrap();
    assert!((e.value - (0.64f64 / 0.03).sqrt()).abs() < 1e-12);
    assert!((e.value - 4.618_802_153_517_006).abs() < 1e-12);
    assert_eq!(skipped_count(&d), 1);
    let hit = cache_hit_ratio(&d, &s).unwrap();
    assert!((hit.raw - 0.8).abs() < 1e-15);
    assert!((hit.normalized - 0.8 / 1.1).abs() < 1e-15);
}

#[test]
fn contiguous_pair_beats_split_pair() {
    let s = series(vec![0.5; 4]);
    let joined = highlight_entropy(
        &CacheDecision::from_bits(1, vec![true, true, false, false]),
        &s,
        1.0,
    );
    let split = highlight_entropy(
        &CacheDecision::from_bits(1, vec![true, false, true, false]),
        &s,
        1.0,
    );
    assert!(joined.unwrap().value > split.unwrap().value);
}

#[test]
fn empty_cache_scores_zero() {
    let s = series(vec![0.3, 0.9, 0.2]);
    let e = highlight_entropy(&CacheDecision::empty(1, 3), &s, 0.5).unwrap();
    assert_eq!(e.value, 0.0);
    assert!(!e.saturated);
}

#[test]
fn full_cache_is_flagged_saturated() {
    let s = series(vec![0.3, 0.9, 0.2]);
    let e = highlight_entropy(&CacheDecision::from_bits(1, vec![true; 3]), &s, 1.0).unwrap();
    assert!(e.saturated);
    assert!((e.value - (1.4f64 * 1.4 / 1e-12).sqrt()).abs() < 1e-3);
}

#[test]
fn jitter_examples() {
    let j = |bits: &[u8]| {
        objective_jitter(&CacheDecision::from_bits(
            1,
            bits.iter().map(|&b| b == 1).collect(),
        ))
    };
    assert_eq!(j(&[1, 1, 1, 1]), 0.0);
    assert_eq!(j(&[1, 0, 0, 1]), 0.5);
    assert!((j(&[1, 0, 1, 0, 1]) - 0.2).abs() < 1e-15);
    assert_eq!(j(&[0, 1, 1, 0]), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn agrees_with_naive_evaluation((y, bits) in pair(), p in 0.0f64..=1.0) {
        let got = highlight_entropy(&CacheDecision::from_bits(1, bits.clone()), &series(y.clone()), p).unwrap();
        let want = naive_entropy(&y, &bits, p);
        prop_assert!(close(got.value, want), "{} vs {}", got.value, want);
    }

    #[test]
    fn non_negative_and_zero_only_without_cached_mass((y, bits) in pair()) {
        let e = highlight_entropy(&CacheDecision::from_bits(1, bits.clone()), &series(y.clone()), 0.7).unwrap();
        prop_assert!(e.value >= 0.0);
        let mass = y.iter().zip(&bits).any(|(v, c)| *c && *v > 0.0);
        prop_assert_eq!(e.value == 0.0, !mass);
    }

    #[test]
    fn bridging_a_zero_gap_never_hurts(
        left in prop::collection::vec(0.0f64..=1.0, 1..10),
        right in prop::collection::vec(0.0f64..=1.0, 1..10),
        pre in prop::collection::vec(0.0f64..=1.0, 0..6),
        post in prop::collection::vec(0.0f64..=1.0, 0..6),
    ) {
        let mut y = pre.clone();
        y.extend(&left);
        y.push(0.0);
        y.extend(&right);
        y.extend(&post);
        let mut split = vec![false; pre.len()];
        split.extend(std::iter::repeat_n(true, left.len()));
        split.push(false);
        split.extend(std::iter::repeat_n(true, right.len()));
        split.extend(std::iter::repeat_n(false, post.len()));
        let mut merged = split.clone();
        merged[pre.len() + left.len()] = true;
        let s = series(y);
        let a = highlight_entropy(&CacheDecision::from_bits(1, split), &s, 1.0).unwrap();
        let b = highlight_entropy(&CacheDecision::from_bits(1, merged), &s, 1.0).unwrap();
        prop_assert!(b.value >= a.value * (1.0 - 1e-12));
    }

    #[test]
    fn ranking_invariant_under_scaling(
        (y, a) in pair(),
        flips in prop::collection::vec(any::<bool>(), 40),
        alpha in 0.05f64..1.0,
    ) {
        let b: Vec<bool> = a.iter().zip(&flips).map(|(x, f)| x ^ f).collect();
        let scaled: Vec<f64> = y.iter().map(|v| v * alpha).collect();
        let score = |ys: &[f64], bits: &[bool]| {
            highlight_entropy(&CacheDecision::from_bits(1, bits.to_vec()), &series(ys.to_vec()), 1.0).unwrap()
        };
        let (ea, eb) = (score(&y, &a), score(&y, &b));
        let (sa, sb) = (score(&scaled, &a), score(&scaled, &b));
        // Saturated values are not scale free: their denominator is a fixed floor.
        prop_assume!(!(ea.saturated || eb.saturated || sa.saturated || sb.saturated));
        let margin = 1e-9 * ea.value.max(eb.value);
        if ea.value > eb.value + margin {
            prop_assert!(sa.value > sb.value);
        } else if eb.value > ea.value + margin {
            prop_assert!(sb.value > sa.value);
        }
    }

    #[test]
    fn jitter_zero_iff_at_most_one_run(bits in prop::collection::vec(any::<bool>(), 1..40)) {
        let d = CacheDecision::from_bits(1, bits);
        prop_assert_eq!(objective_jitter(&d) == 0.0, d.runs().len() <= 1);
    }
}

fn pair_score(n: usize, i: usize, j: usize) -> f64 {
    let mut bits = vec![false; n];
    bits[i] = true;
    bits[j] = true;
    highlight_entropy(&CacheDecision::from_bits(1, bits), &series(vec![0.4; n]), 1.0)
        .unwrap()
        .value
}

#[test]
fn best_adjacent_pair_beats_every_split_pair() {
    for n in 3..=10 {
        let best_adjacent = (0..n - 1).map(|i| pair_score(n, i, i + 1)).fold(0.0, f64::max);
        for i in 0..n {
            for j in i + 2..n {
                assert!(best_adjacent > pair_score(n, i, j), "n={n}: pair ({i},{j})");
            }
        }
    }
}

#[test]
fn pair_at_both_ends_skips_once() {
    // Chunks 1 and X leave a single skipped stretch, which outweighs the
    // run bonus of an interior adjacent pair.
    for n in 4..=10 {
        let ends = pair_score(n, 0, n - 1);
        let interior = pair_score(n, 1, 2);
        assert!((ends / interior - 2f64.sqrt()).abs() < 1e-12, "n={n}");
    }
}
