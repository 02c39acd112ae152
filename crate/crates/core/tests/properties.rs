mod common;

use linkinit::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn binary_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BinaryMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(any::<bool>(), r * c)
            .prop_map(move |bits| BinaryMatrix::from_fn(r, c, |i, j| bits[i * c + j]))
    })
}

fn graph(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let edges: Vec<_> = (0..n * n)
                .filter(|&k| bits[k] && k / n != k % n)
                .map(|k| (k / n, k % n))
                .collect();
            DirectedGraph::from_edges(n, &edges).unwrap()
        })
    })
}

/// Distances from boolean matrix powers: `d(a, b)` is the smallest `k` with
/// `(I + A)^k (a, b) = 1`.
fn power_distances(g: &DirectedGraph) -> Vec<Option<u32>> {
    let n = g.node_count();
    let step = |r: &Vec<bool>| {
        let mut next = r.clone();
        for a in 0..n {
            for c in 0..n {
                if r[a * n + c] {
                    for b in 0..n {
                        if g.has_edge(c, b) {
                            next[a * n + b] = true;
                        }
                    }
                }
            }
        }
        next
    };
    let mut reach: Vec<bool> = (0..n * n).map(|k| k / n == k % n).collect();
    let mut dist: Vec<Option<u32>> = reach.iter().map(|&r| r.then_some(0)).collect();
    for k in 1..n as u32 {
        reach = step(&reach);
        for (d, &r) in dist.iter_mut().zip(&reach) {
            if r && d.is_none() {
                *d = Some(k);
            }
        }
    }
    dist
}

proptest! {
    #[test]
    fn matrix_text_round_trip(m in binary_matrix(8, 8)) {
        prop_assert_eq!(BinaryMatrix::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn complement_counts(m in binary_matrix(8, 8)) {
        prop_assert_eq!(m.count_ones() + m.complement().count_ones(), m.rows() * m.cols());
        prop_assert_eq!(m.complement().complement(), m);
    }

    #[test]
    fn apsp_matches_matrix_powers(g in graph(8)) {
        let d = all_pairs_distances(&g);
        let oracle = power_distances(&g);
        let n = g.node_count();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(d.get(a, b), oracle[a * n + b]);
            }
        }
    }

    #[test]
    fn adding_an_edge_never_lengthens_paths(g in graph(7), a in 0usize..7, b in 0usize..7) {
        let n = g.node_count();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b && !g.has_edge(a, b));
        let before = all_pairs_distances(&g);
        let after = all_pairs_distances(&g.flip_edge(a, b).unwrap());
        for x in 0..n {
            for y in 0..n {
                let (p, q) = (before.raw(x, y), after.raw(x, y));
                prop_assert!(q <= p);
            }
        }
    }

    #[test]
    fn edge_flip_is_an_involution(g in graph(7), a in 0usize..7, b in 0usize..7) {
        let n = g.node_count();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        prop_assert_eq!(g.flip_edge(a, b).unwrap().flip_edge(a, b).unwrap(), g);
    }

    #[test]
    fn likelihood_matches_product_oracle(
        g in graph(6),
        bits in prop::collection::vec(any::<bool>(), 72),
        alpha in 0.0f64..=1.0,
    ) {
        let n = g.node_count();
        let m = BinaryMatrix::from_fn(n, 6, |i, u| bits[i * 6 + u]);
        let inits = BinaryMatrix::from_fn(n, 6, |i, u| bits[i * 6 + u] && bits[36 + i * 6 + u]);
        let got = log_likelihood(&m, &g, &inits, SpParams::new(alpha).unwrap()).unwrap();
        let oracle = common::log_lik_single(&m, &g, &inits, alpha);
        if oracle.is_finite() {
            prop_assert!((got - oracle).abs() <= 1e-9 * oracle.abs().max(1.0), "{} vs {}", got, oracle);
        } else {
            prop_assert_eq!(got, oracle);
        }
    }

    #[test]
    fn generic_likelihood_is_never_positive(
        g in graph(5),
        bits in prop::collection::vec(any::<bool>(), 50),
        edge_prob in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let n = g.node_count();
        let m = BinaryMatrix::from_fn(n, 5, |i, u| bits[i * 5 + u]);
        let inits = BinaryMatrix::from_fn(n, 5, |i, u| bits[25 + i * 5 + u]);
        let model = IndependentCascade::new(edge_prob).unwrap();
        let params = GenericLikelihoodParams::new(1.5, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = generic_log_likelihood(&m, &g, &inits, &model, params, &mut rng).unwrap();
        prop_assert!(v <= 0.0);
    }

    #[test]
    fn degraded_sequences_validate(m in binary_matrix(8, 8), t in 1usize..6, seed in any::<u64>()) {
        let seq = degrade_temporal(&m, t, seed).unwrap();
        prop_assert_eq!(seq.len(), t);
        prop_assert_eq!(seq.last(), &m);
        prop_assert!(validate_sequence(seq.matrices()).is_ok());
        for x in seq.matrices() {
            prop_assert!(x.is_subset_of(&m));
        }
    }

    #[test]
    fn planted_instances_are_consistent(seed in any::<u64>(), edges in 0usize..20, per in 1usize..4) {
        let inst = synth_planted(6, 5, edges, per, SpParams::new(0.7).unwrap(), seed).unwrap();
        prop_assert_eq!(inst.true_graph.edge_count(), edges);
        prop_assert!(inst.true_initiators.is_subset_of(&inst.observed));
        for u in 0..5 {
            let k = (0..6).filter(|&i| inst.true_initiators.get(i, u)).count();
            prop_assert_eq!(k, per);
        }
        let ll = log_likelihood(&inst.observed, &inst.true_graph, &inst.true_initiators, inst.params).unwrap();
        prop_assert!(ll.is_finite());
    }

    #[test]
    fn pearson_ignores_a_shared_cell_permutation(
        vals in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), 3),
        perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let snaps: Vec<RealMatrix> = vals.iter().map(|v| RealMatrix::from_vec(3, 4, v.clone())).collect();
        let permuted: Vec<RealMatrix> = vals
            .iter()
            .map(|v| RealMatrix::from_vec(3, 4, perm.iter().map(|&k| v[k]).collect()))
            .collect();
        let a = pearson_matrix(&snaps, false).unwrap();
        let b = pearson_matrix(&permuted, false).unwrap();
        for (x, y) in a.coefficients.values().iter().zip(b.coefficients.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for i in 0..3 {
            prop_assert_eq!(a.coefficients.get(i, i), 1.0);
            for j in 0..3 {
                prop_assert_eq!(a.coefficients.get(i, j), a.coefficients.get(j, i));
                prop_assert!((-1.0..=1.0).contains(&a.coefficients.get(i, j)));
            }
        }
    }

    #[test]
    fn hamming_ignores_column_order(
        m in binary_matrix(6, 8),
        perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let cols: Vec<usize> = perm.into_iter().filter(|&c| c < m.cols()).collect();
        let shuffled = BinaryMatrix::from_fn(m.rows(), m.cols(), |i, u| m.get(i, cols[u]));
        prop_assert_eq!(hamming_similarity(&m), hamming_similarity(&shuffled));
    }
}
