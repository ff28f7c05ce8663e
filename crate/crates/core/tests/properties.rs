use blockcount::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph_from_bits(n: usize, bits: &[bool]) -> AdjacencyMatrix {
    let mut edges = Vec::new();
    let mut t = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[t % bits.len()] {
                edges.push((i, j));
            }
            t += 1;
        }
    }
    AdjacencyMatrix::from_edges(n, edges).unwrap()
}

fn arb_graph(min: usize, max: usize) -> impl Strategy<Value = AdjacencyMatrix> {
    (min..=max, prop::collection::vec(any::<bool>(), 1..200))
        .prop_map(|(n, bits)| graph_from_bits(n, &bits))
}

fn arb_dense_graph(n: usize, p: f64) -> impl Strategy<Value = AdjacencyMatrix> {
    any::<u64>().prop_map(move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        AdjacencyMatrix::from_edges(n, edges).unwrap()
    })
}

fn arb_partition(n: usize, k: usize) -> impl Strategy<Value = Partition> {
    prop::collection::vec(0..k, n)
        .prop_filter("no empty groups", move |l| (0..k).all(|g| l.contains(&g)))
        .prop_map(move |l| Partition::new(k, l).unwrap())
}

fn arb_points(n: usize, dim: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(-5.0f64..5.0, n * dim).prop_map(move |d| PointSet::new(dim, d).unwrap())
}

fn distances(points: &PointSet) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        points
            .row(i)
            .iter()
            .zip(points.row(j))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    })
}

fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

fn rotate(points: &PointSet, q: &DMatrix<f64>) -> PointSet {
    let dim = points.dim();
    let mut data = Vec::with_capacity(points.len() * dim);
    for i in 0..points.len() {
        let row = points.row(i);
        data.extend((0..dim).map(|c| (0..dim).map(|r| row[r] * q[(r, c)]).sum::<f64>()));
    }
    PointSet::new(dim, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn adjacency_is_symmetric_without_loops(adj in arb_graph(1, 30)) {
        for i in 0..adj.n() {
            prop_assert_eq!(adj.get(i, i), 0);
            for j in 0..adj.n() {
                prop_assert_eq!(adj.get(i, j), adj.get(j, i));
            }
            prop_assert_eq!(adj.degree(i), adj.neighbors(i).len());
        }
        let total: usize = (0..adj.n()).map(|i| adj.degree(i)).sum();
        prop_assert_eq!(total, 2 * adj.edge_count());
    }

    #[test]
    fn theta_normalisation_matches_group_sizes(
        z in arb_partition(20, 3),
        raw in prop::collection::vec(0.01f64..10.0, 20),
    ) {
        let theta = normalize_theta(&raw, &z).unwrap();
        let sums = theta.group_sums(&z);
        for (g, size) in z.sizes().into_iter().enumerate() {
            prop_assert!((sums[g] - size as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn kmeans_objective_matches_its_partition(points in arb_points(25, 3), k in 1usize..5, seed in any::<u64>()) {
        let fit = kmeans(&points, k, &mut ChaCha8Rng::seed_from_u64(seed), 3).unwrap();
        let recomputed: f64 = fit
            .partition
            .groups()
            .iter()
            .filter(|g| !g.is_empty())
            .map(|g| within_ss(&points, g).unwrap())
            .sum();
        prop_assert!((recomputed - fit.objective).abs() < 1e-8);
        let all: Vec<usize> = (0..points.len()).collect();
        prop_assert!(fit.objective <= within_ss(&points, &all).unwrap() + 1e-9);
    }

    #[test]
    fn segmentation_refines_and_scores_are_non_negative(
        points in arb_points(24, 3),
        z in arb_partition(24, 2),
        seed in any::<u64>(),
    ) {
        let seg = binary_segment(&z, &points, &mut ChaCha8Rng::seed_from_u64(seed), 3).unwrap();
        prop_assert_eq!(seg.partition.k(), 3);
        prop_assert!(seg.partition.refines(&z));
        prop_assert!(seg.partition.empty_groups().is_empty());
        for (g, size) in z.sizes().into_iter().enumerate() {
            if size >= 2 {
                prop_assert!(seg.scores[g] >= 0.0);
            }
        }
        for i in 0..24 {
            if z.label(i) != seg.split_group {
                prop_assert_eq!(seg.partition.label(i), z.label(i));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pseudo_lr_is_permutation_invariant(
        adj in arb_dense_graph(14, 0.5),
        z in arb_partition(14, 2),
        split in arb_partition(14, 2),
        perm in Just((0..14).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let refined_labels: Vec<usize> = (0..14)
            .map(|i| if z.label(i) == 0 && split.label(i) == 1 { 2 } else { z.label(i) })
            .collect();
        prop_assume!((0..3).all(|g| refined_labels.contains(&g)));
        let refined = Partition::new(3, refined_labels).unwrap();
        let Ok(v) = pseudo_lr(&adj, &z, &refined) else { return Ok(()) };
        let moved = pseudo_lr(&adj.permuted(&perm).unwrap(), &z.permuted(&perm), &refined.permuted(&perm)).unwrap();
        prop_assert!((v - moved).abs() <= 1e-9 * v.max(1.0));
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn unsplit_groups_keep_their_fitted_probabilities(
        adj in arb_dense_graph(16, 0.5),
        z in arb_partition(16, 3),
        points in arb_points(16, 4),
        seed in any::<u64>(),
    ) {
        let seg = binary_segment(&z, &points, &mut ChaCha8Rng::seed_from_u64(seed), 2).unwrap();
        let (Ok(base), Ok(alt)) = (fit_dcsbm(&adj, &z), fit_dcsbm(&adj, &seg.partition)) else {
            return Ok(());
        };
        for i in 0..16 {
            for j in 0..16 {
                if i != j && z.label(i) != seg.split_group && z.label(j) != seg.split_group {
                    prop_assert_eq!(base.p_hat(i, j), alt.p_hat(i, j));
                }
            }
        }
    }

    #[test]
    fn rotation_leaves_objectives_unchanged(points in arb_points(20, 3), k in 1usize..4, seed in any::<u64>()) {
        let q = random_orthogonal(3, seed);
        let turned = rotate(&points, &q);
        let all: Vec<usize> = (0..20).collect();
        prop_assert!((within_ss(&points, &all).unwrap() - within_ss(&turned, &all).unwrap()).abs() < 1e-8);
        let a = kmeans(&points, k, &mut ChaCha8Rng::seed_from_u64(seed), 3).unwrap();
        let b = kmeans(&turned, k, &mut ChaCha8Rng::seed_from_u64(seed), 3).unwrap();
        prop_assert!((a.objective - b.objective).abs() < 1e-7, "{} vs {}", a.objective, b.objective);
    }

    #[test]
    fn embedding_distances_follow_node_permutation(
        adj in arb_dense_graph(12, 0.45),
        perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let e = eigendecompose(&regularized_laplacian(&adj, 1.0).unwrap()).unwrap();
        let gap = e.eigenvalues[1].abs() - e.eigenvalues[2].abs();
        let top = e.eigenvalues[0].abs() - e.eigenvalues[1].abs();
        prop_assume!(gap > 1e-6 && top > 1e-6);
        let moved = eigendecompose(&regularized_laplacian(&adj.permuted(&perm).unwrap(), 1.0).unwrap()).unwrap();
        let d0 = distances(&e.embedding_rows(2).unwrap().points);
        let d1 = distances(&moved.embedding_rows(2).unwrap().points);
        for i in 0..12 {
            for j in 0..12 {
                prop_assert!((d0[(i, j)] - d1[(perm[i], perm[j])]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn embedding_distances_ignore_column_rotation(adj in arb_dense_graph(12, 0.45), seed in any::<u64>()) {
        let e = eigendecompose(&regularized_laplacian(&adj, 1.0).unwrap()).unwrap();
        let rows = e.embedding_rows(3).unwrap();
        let mut turned = e.clone();
        let q = random_orthogonal(3, seed);
        let lead = e.eigenvectors.columns(0, 3) * &q;
        turned.eigenvectors.columns_mut(0, 3).copy_from(&lead);
        let d0 = distances(&rows.points);
        let d1 = distances(&turned.embedding_rows(3).unwrap().points);
        prop_assert!((d0 - d1).amax() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn selection_is_deterministic_and_trace_consistent(adj in arb_dense_graph(40, 0.3), seed in any::<u64>()) {
        let cfg = SelectionConfig { k_max: 4, restarts: 3, ..SelectionConfig::default() };
        let run = |s| select_k(&adj, &cfg, &mut ChaCha8Rng::seed_from_u64(s));
        let (Ok(a), Ok(b)) = (run(seed), run(seed)) else { return Ok(()) };
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for k in 1..=a.k_max() {
            prop_assert_eq!(a.partition(k).map(|p| p.labels().to_vec()), b.partition(k).map(|p| p.labels().to_vec()));
        }
        for (idx, step) in a.per_k.iter().enumerate() {
            if let Some(l) = step.l_n {
                prop_assert!(l >= 0.0);
            }
            let den = if idx == 0 { Some(a.eta_n) } else { a.per_k[idx - 1].l_n };
            if let (Some(num), Some(den), Some(r)) = (step.l_n, den, step.r) {
                if den > 0.0 {
                    prop_assert!((r - num / den).abs() <= 1e-12 * r.abs().max(1.0));
                }
            }
        }
        prop_assert_eq!(a.k2, a.k1.min(a.k2_tilde));
        if let Some(r) = a.ratio(a.k1) {
            for other in a.ratios().into_iter().flatten() {
                prop_assert!(r <= other);
            }
        }
    }
}
