mod common;

use proptest::prelude::*;
use sbm_paths::detection::{estimate_spins, overlap, run_experiment, threshold_sweep, DetectOptions, PathLengthMode};
use sbm_paths::graph::{bfs_ball, cycle_census, neighborhood_stats};
use sbm_paths::io;
use sbm_paths::par;
use sbm_paths::paths::{build_matrix, count_paths_exact};
use sbm_paths::sbm::{derive_params, is_detectable, mean_matrix, sample_graph, sample_spins};
use sbm_paths::spectral::{ramanujan_sup, top_eigenpairs, EigenOptions, SymmetricOperator};
use sbm_paths::tree::{predict_overlap, simulate_many, DeltaSample};
use sbm_paths::{Graph, PathGuard, SbmParams, SpinAssignment};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            Graph::from_edges(n, pairs.into_iter().filter(|(u, v)| u != v)).unwrap()
        })
    })
}

fn spins_strategy(n: usize) -> impl Strategy<Value = SpinAssignment> {
    prop::collection::vec(prop::bool::ANY, n)
        .prop_map(|bits| SpinAssignment::new(bits.into_iter().map(|b| if b { 1 } else { -1 }).collect()).unwrap())
}

fn graph_and_spins(max_n: usize) -> impl Strategy<Value = (Graph, SpinAssignment)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), spins_strategy(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detectability_matches_tau(a in 0.0f64..30.0, b in 0.0f64..30.0) {
        prop_assume!(a + b > 0.0);
        let d = derive_params(&SbmParams::new(100, a, b).unwrap()).unwrap();
        prop_assert_eq!(is_detectable(&d), (a - b).powi(2) / (2.0 * (a + b)) > 1.0);
    }

    #[test]
    fn sampled_graphs_are_simple(n in 2usize..80, a in 0.0f64..10.0, b in 0.0f64..10.0, seed in any::<u64>()) {
        prop_assume!(a <= n as f64 && b <= n as f64);
        let p = SbmParams::new(n, a, b).unwrap();
        let s = sample_spins(n, seed);
        let g = sample_graph(&p, &s, seed).unwrap();
        for i in 0..n {
            prop_assert!(!g.has_edge(i, i));
            for &j in g.neighbors(i) {
                prop_assert!(g.has_edge(j, i));
            }
        }
        let again = par::with_threads(Some(3), || sample_graph(&p, &sample_spins(n, seed), seed).unwrap());
        prop_assert_eq!(g, again);
    }

    #[test]
    fn mean_matrix_by_hand(bits in prop::collection::vec(prop::bool::ANY, 2..=6), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let n = bits.len();
        let s = SpinAssignment::new(bits.iter().map(|&x| if x { 1 } else { -1 }).collect()).unwrap();
        let m = mean_matrix(&SbmParams::new(n, a, b).unwrap(), &s).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 0.0 } else if bits[i] == bits[j] { a / n as f64 } else { b / n as f64 };
                prop_assert!((m.entry(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ball_layers_partition((g, s) in graph_and_spins(30), radius in 0usize..5) {
        for i in 0..g.n() {
            let ball = bfs_ball(&g, i, radius).unwrap();
            let mut all: Vec<usize> = ball.layers.concat();
            prop_assert_eq!(all.len(), ball.size());
            all.sort_unstable();
            all.dedup();
            prop_assert_eq!(all.len(), ball.size());
            let st = neighborhood_stats(&ball, &s);
            for t in 0..=radius {
                prop_assert_eq!(st.s[t], st.u_plus[t] + st.u_minus[t]);
                prop_assert_eq!(st.d[t], st.u_plus[t] as i64 - st.u_minus[t] as i64);
            }
        }
        // Whole-graph ball covers the component.
        let big = bfs_ball(&g, 0, g.n()).unwrap();
        let dist = common::floyd_warshall(&g);
        prop_assert_eq!(big.size(), dist[0].iter().filter(|&&d| d != usize::MAX).count());
    }

    #[test]
    fn trees_have_no_extra_edges(parents in prop::collection::vec(any::<prop::sample::Index>(), 1..40)) {
        let n = parents.len() + 1;
        let edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(k, ix)| (ix.index(k + 1), k + 1)).collect();
        let g = Graph::from_edges(n, edges).unwrap();
        for ell in 0..4 {
            prop_assert!(cycle_census(&g, ell).extra_edges.iter().all(|&e| e == 0));
        }
    }

    #[test]
    fn build_matrix_equals_dfs(g in graph_strategy(16), ell in 0usize..=4) {
        let b = build_matrix(&g, ell, &PathGuard::default()).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert_eq!(b.get(i, j), count_paths_exact(&g, i, j, ell).unwrap());
            }
        }
    }

    #[test]
    fn path_counts_on_tree_balls((g, s) in graph_and_spins(40), ell in 1usize..=4) {
        let b = build_matrix(&g, ell, &PathGuard::default()).unwrap();
        let be = b.apply_vec(&vec![1.0; g.n()]);
        let bs = b.apply_vec(&s.to_f64());
        let census = cycle_census(&g, ell);
        for i in 0..g.n() {
            prop_assert_eq!(b.get(i, i), 0);
            for j in 0..g.n() {
                prop_assert_eq!(b.get(i, j), b.get(j, i));
            }
            let st = neighborhood_stats(&bfs_ball(&g, i, ell).unwrap(), &s);
            match census.extra_edges[i] {
                0 => {
                    prop_assert_eq!(be[i], st.s[ell] as f64);
                    prop_assert_eq!(bs[i], st.d[ell] as f64);
                }
                1 => prop_assert!(be[i] <= 2.0 * st.s.iter().sum::<u64>() as f64),
                _ => {}
            }
        }
    }

    #[test]
    fn eigen_invariants(g in graph_strategy(30), seed_a in any::<u64>(), seed_b in any::<u64>()) {
        prop_assume!(g.m() > 0);
        let b = build_matrix(&g, 2, &PathGuard::default()).unwrap();
        let k = 3.min(g.n());
        let opts = EigenOptions { seed: seed_a, ..Default::default() };
        let pa = top_eigenpairs(&b, k, &opts).unwrap();
        let pb = top_eigenpairs(&b, k, &EigenOptions { seed: seed_b, ..Default::default() }).unwrap();
        let scale = pa[0].value.abs().max(1.0);
        for (x, y) in pa.iter().zip(&pb) {
            prop_assert!(x.residual <= opts.tol * scale);
            prop_assert!((x.value.abs() - y.value.abs()).abs() <= 1e-8 * scale);
            let (mut big, mut at) = (0.0f64, 0);
            for (idx, v) in x.vector.iter().enumerate() {
                if v.abs() > big { big = v.abs(); at = idx; }
            }
            prop_assert!(x.vector[at] > 0.0);
        }
        let n = g.n();
        let be = b.apply_vec(&vec![1.0; n]);
        let bx = b.apply_vec(&(0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<_>>());
        if let Ok(sup) = ramanujan_sup(&b, &be, &bx, &opts) {
            prop_assert!(sup <= pa[0].value.abs() + 1e-9 * scale);
        }
    }

    #[test]
    fn overlap_flips_and_scales(x in prop::collection::vec(-5.0f64..5.0, 2..60), t in -2.0f64..2.0, c in 0.01f64..100.0, seed in any::<u64>()) {
        let n = x.len();
        let sigma = sample_spins(n, seed);
        let hat = estimate_spins(&x, t, 0).estimates;
        prop_assert_eq!(overlap(&sigma, &hat).unwrap(), -overlap(&sigma, &hat.flipped()).unwrap());
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        // Scaling is exact only away from rounding at the threshold.
        let safe = x.iter().all(|v| ((v * (n as f64).sqrt()) - t).abs() > 1e-9);
        if safe {
            prop_assert_eq!(&estimate_spins(&scaled, t * c, 0).estimates, &hat);
        }
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        if x.iter().all(|v| *v != 0.0) {
            let o1 = overlap(&sigma, &estimate_spins(&x, 0.0, 0).estimates).unwrap();
            let o2 = overlap(&sigma, &estimate_spins(&neg, 0.0, 0).estimates).unwrap();
            prop_assert_eq!(o1.abs(), o2.abs());
        }
        let sweep = threshold_sweep(&x, &sigma, &[-1.0, 0.0, 0.5, 1.0]).unwrap();
        let at0 = overlap(&sigma, &estimate_spins(&x, 0.0, 0).estimates).unwrap();
        prop_assert!(sweep.best_abs_overlap >= at0.abs());
    }

    #[test]
    fn prediction_bounded(values in prop::collection::vec(-10.0f64..10.0, 1..50), t in 0.0f64..12.0) {
        let s = DeltaSample::from_values(1, values).unwrap();
        let p = predict_overlap(&s, t);
        prop_assert!((-0.5..=0.5).contains(&p));
    }

    #[test]
    fn edge_list_round_trip(g in graph_strategy(40), s_seed in any::<u64>()) {
        let mut buf = Vec::new();
        io::write_edge_list(&g, &["hello".to_string()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = format!("# n={} m={}", g.n(), g.m());
        prop_assert!(text.starts_with(&header));
        prop_assert_eq!(io::parse_edge_list(&text, "mem").unwrap(), g.clone());
        let s = sample_spins(g.n(), s_seed);
        let mut buf = Vec::new();
        io::write_spins(&s, &[], &mut buf).unwrap();
        prop_assert_eq!(io::parse_spins(&String::from_utf8(buf).unwrap(), "mem").unwrap(), s);
    }
}

#[test]
fn extinction_is_absorbing() {
    for tr in simulate_many(2.0, 0.5, 10, 5000, 11).unwrap() {
        let pops: Vec<u64> = (0..=10).map(|t| tr.population(t)).collect();
        if let Some(z) = pops.iter().position(|&p| p == 0) {
            assert!(pops[z..].iter().all(|&p| p == 0));
        }
    }
}

#[test]
fn prediction_is_monotone_for_tree_sample() {
    let s = sbm_paths::tree::monte_carlo_delta(7.0, 1.0, 8, 20_000, 5).unwrap();
    let mut last = f64::INFINITY;
    for k in 0..80 {
        let p = predict_overlap(&s, k as f64 * 0.05);
        assert!(p <= last + 1e-12, "t = {}", k as f64 * 0.05);
        last = p;
    }
    assert!(predict_overlap(&s, 0.0) > 0.0);
}

#[test]
fn experiments_are_bit_reproducible() {
    let p = SbmParams::new(300, 7.0, 1.0).unwrap();
    let opts = DetectOptions { null_resamples: 20, ..Default::default() };
    let run = |threads| {
        par::with_threads(Some(threads), || run_experiment(&p, PathLengthMode::Fixed(2), 0.0, &[1, 2, 3], &opts).unwrap())
    };
    let strip = |t: sbm_paths::detection::ExperimentTable| {
        t.rows
            .into_iter()
            .map(|mut r| {
                if let Ok(v) = &mut r.outcome {
                    v.wall_ms = 0.0;
                }
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(run(1)), strip(run(4)));
}
