// SPDX-License-Identifier: MIT OR Apache-2.0

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samecp_core::io::{parse_segment_table, read_series, segment_table};
use samecp_core::simulation::{child_seed, DEFAULT_MASTER_SEED};
use samecp_core::{
    binary_segmentation, detect, diff_variance, evaluate, gen_normal, merge, multi_screen,
    normal_quantile, optimal_partitioning, pelt, penalized_cost, run_grid, segment, ChangePointSet,
    GridOptions, Method, PenaltySpec, SameConfig, Series, SimSpec,
};

fn gaussian_walk(seed: u64, n: usize, jump: f64) -> Series {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 0.0;
    let values = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.02 {
                level += rng.random_range(-jump..jump);
            }
            level + normal_quantile(rng.random_range(1e-12..1.0 - 1e-12)).unwrap()
        })
        .collect();
    Series::new(values).unwrap()
}

#[test]
fn pruning_never_changes_the_optimum() {
    for seed in 0..100 {
        let x = gaussian_walk(seed, 500, 4.0);
        let penalty = match seed % 3 {
            0 => PenaltySpec::bic(),
            1 => PenaltySpec::aic().with_min_seg(5),
            _ => PenaltySpec::manual(6.0).with_min_seg(12),
        };
        let pruned = pelt(&x, &penalty).unwrap();
        let full = optimal_partitioning(&x, &penalty).unwrap();
        assert_eq!(pruned, full, "seed {seed}");
    }
}

#[test]
fn pelt_cost_beats_perturbed_partitions() {
    let x = gaussian_walk(4, 200, 5.0);
    let penalty = PenaltySpec::bic().with_min_seg(3);
    let beta = penalty.beta(x.len());
    let best = pelt(&x, &penalty).unwrap();
    let best_cost = penalized_cost(&x, &best, beta).unwrap();
    for (i, &p) in best.points().iter().enumerate() {
        for d in [-2i64, -1, 1, 2] {
            let mut moved = best.points().to_vec();
            moved[i] = (p as i64 + d) as usize;
            if let Ok(alt) = ChangePointSet::new(moved, x.len()) {
                if alt.segments(x.len()).iter().any(|(a, b)| b - a < 3) {
                    continue;
                }
                assert!(penalized_cost(&x, &alt, beta).unwrap() >= best_cost - 1e-9);
            }
        }
        let mut dropped = best.points().to_vec();
        dropped.remove(i);
        let alt = ChangePointSet::new(dropped, x.len()).unwrap();
        assert!(penalized_cost(&x, &alt, beta).unwrap() >= best_cost - 1e-9);
    }
}

#[test]
fn binseg_respects_min_seg() {
    for seed in 0..30 {
        let x = gaussian_walk(seed, 800, 6.0);
        let min_seg = 5 + seed as usize % 20;
        let cps = binary_segmentation(&x, 0.05, min_seg).unwrap();
        let mut edges = vec![1];
        edges.extend(cps.points());
        edges.push(x.len() + 1);
        assert!(
            edges.windows(2).all(|w| w[1] - w[0] >= min_seg),
            "seed {seed}: {cps:?}"
        );
    }
}

#[test]
fn pipeline_output_respects_min_segment_length() {
    let config = SameConfig::default();
    for seed in 0..30 {
        let x = gaussian_walk(seed, 3_000, 4.0);
        let cps = detect(&x, &config).unwrap();
        let mut edges = vec![1];
        edges.extend(cps.points());
        edges.push(x.len() + 1);
        assert!(
            edges.windows(2).all(|w| w[1] - w[0] >= config.k_prime),
            "seed {seed}: {cps:?}"
        );
    }
}

#[test]
fn merge_is_idempotent_on_strong_signals() {
    let config = SameConfig::default();
    for seed in 0..10 {
        let spec = SimSpec::gaussian(6, 100, 4.0).with_seed(seed);
        let x = gen_normal(&spec).unwrap().0;
        let s = diff_variance(&x).unwrap().s;
        let cands = multi_screen(
            &x,
            &config.bandwidths,
            config.alpha_screen,
            config.k_prime,
            s,
        )
        .unwrap();
        let once = merge(&x, &cands, &config.merge_config(), s).unwrap();
        let again_cands = samecp_core::CandidateSet::new(
            once.points()
                .iter()
                .map(|&index| samecp_core::Candidate {
                    index,
                    score: 0.0,
                    bandwidth: 0,
                })
                .collect(),
        )
        .unwrap();
        let twice = merge(&x, &again_cands, &config.merge_config(), s).unwrap();
        let critical = config.merge_config().critical_value().unwrap();
        let edges: Vec<usize> = std::iter::once(1)
            .chain(once.points().iter().copied())
            .chain(std::iter::once(x.len() + 1))
            .collect();
        let all_strong = edges.windows(3).all(|w| {
            samecp_core::merge_test(&x, w[0], w[1], w[2], s)
                .unwrap()
                .abs()
                > critical
        });
        if all_strong {
            assert_eq!(once, twice, "seed {seed}");
        }
    }
}

#[test]
fn noiseless_blocks_are_recovered_exactly() {
    let mut values = Vec::new();
    for (len, level) in [(400, 0.0), (150, 2.0), (300, -1.0), (80, 3.0), (500, 0.0)] {
        values.extend(std::iter::repeat_n(level, len));
    }
    // tiny deterministic wobble keeps the variance estimate positive
    let x = Series::new(
        values
            .iter()
            .enumerate()
            .map(|(i, v)| v + 1e-3 * ((i % 7) as f64 - 3.0))
            .collect(),
    )
    .unwrap();
    let seg = segment(&x, &SameConfig::default()).unwrap();
    assert_eq!(seg.change_points(), &[401, 551, 851, 931]);
}

#[test]
fn grid_is_deterministic_and_thread_count_independent() {
    let methods: Vec<Method> = ["same", "binseg"]
        .iter()
        .map(|m| Method::from_name(m).unwrap())
        .collect();
    let scenarios = [
        SimSpec {
            n: 2_000,
            ..SimSpec::gaussian(2, 25, 1.5)
        },
        SimSpec {
            n: 2_000,
            ..SimSpec::gaussian(4, 100, 1.0)
        },
    ];
    let strip = |mut r: samecp_core::SimReport| {
        r.rows.iter_mut().for_each(|row| row.t_mean = 0.0);
        r
    };
    let run = |threads| {
        let options = GridOptions {
            max_threads: threads,
            pools: None,
        };
        strip(run_grid(&methods, &scenarios, 12, DEFAULT_MASTER_SEED, &options).unwrap())
    };
    let a = run(Some(1));
    assert_eq!(a, run(Some(4)));
    assert_eq!(a, run(None));
    assert_eq!(a.rows.len(), 4);
    assert_ne!(child_seed(1, 0, 0), child_seed(1, 0, 1));
    assert_ne!(child_seed(1, 0, 0), child_seed(1, 1, 0));
}

#[test]
fn unknown_method_lists_alternatives() {
    let err = Method::from_name("cbs").unwrap_err().to_string();
    assert!(err.contains("same, binseg, pelt"), "{err}");
}

#[test]
fn evaluation_counts_one_to_one_matches() {
    let truth = ChangePointSet::new(vec![100, 200], 1_000).unwrap();
    let est = ChangePointSet::new(vec![95, 104, 203, 600], 1_000).unwrap();
    let m = evaluate(&truth, &est, 0.5);
    assert_eq!((m.p10, m.p5, m.fp, m.t), (1.0, 1.0, 2.0, 0.5));
    let far = ChangePointSet::new(vec![108, 211], 1_000).unwrap();
    let m = evaluate(&truth, &far, 0.0);
    assert_eq!((m.p10, m.p5, m.fp), (0.5, 0.0, 1.0));
    // inclusive tolerance edges
    let edge = ChangePointSet::new(vec![90, 205], 1_000).unwrap();
    let m = evaluate(&truth, &edge, 0.0);
    assert_eq!((m.p10, m.p5), (1.0, 0.5));
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let mut text = String::from("position,value\n");
    let x = gaussian_walk(9, 600, 5.0);
    for (i, v) in x.values().iter().enumerate() {
        text.push_str(&format!("{},{v:?}\n", 1_000 + 10 * i));
    }
    std::fs::write(&path, text).unwrap();
    let read = read_series(&path).unwrap();
    assert_eq!(read, x);
    let seg = segment(
        &read,
        &SameConfig {
            bandwidths: vec![25, 50],
            ..SameConfig::default()
        },
    )
    .unwrap();
    let table = segment_table(&seg);
    let back = parse_segment_table(&table, &path).unwrap();
    assert_eq!(back.len(), seg.segments.len());
    assert_eq!(back.last().unwrap().end, 600);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detect_is_shift_and_scale_invariant(
        seed in 0u64..10_000,
        shift in -50i32..50,
        scale_exp in -3i32..4,
    ) {
        let x = gaussian_walk(seed, 600, 3.0);
        let config = SameConfig { bandwidths: vec![25, 50], ..SameConfig::default() };
        let scale = 2f64.powi(scale_exp);
        let moved = Series::new(x.values().iter().map(|v| v * scale + shift as f64 / 4.0).collect()).unwrap();
        prop_assert_eq!(detect(&x, &config).unwrap(), detect(&moved, &config).unwrap());
    }

    #[test]
    fn segments_tile_the_series(seed in 0u64..10_000, n in 200usize..900) {
        let x = gaussian_walk(seed, n, 5.0);
        let seg = segment(&x, &SameConfig { bandwidths: vec![25, 50, 100], ..SameConfig::default() }).unwrap();
        let mut next = 1;
        for s in &seg.segments {
            prop_assert_eq!(s.start, next);
            prop_assert_eq!(s.length, s.end - s.start + 1);
            let mean = x.values()[s.start - 1..s.end].iter().sum::<f64>() / s.length as f64;
            prop_assert!((mean - s.mean).abs() <= 1e-9 * (1.0 + mean.abs()));
            next = s.end + 1;
        }
        prop_assert_eq!(next, n + 1);
    }

    #[test]
    fn pelt_shift_invariant(seed in 0u64..10_000, shift in -20i32..20) {
        let x = gaussian_walk(seed, 300, 4.0);
        let moved = Series::new(x.values().iter().map(|v| v + shift as f64).collect()).unwrap();
        let p = PenaltySpec::bic();
        prop_assert_eq!(pelt(&x, &p).unwrap(), pelt(&moved, &p).unwrap());
        prop_assert_eq!(binary_segmentation(&x, 0.01, 20).unwrap(), binary_segmentation(&moved, 0.01, 20).unwrap());
    }
}
