//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use blockcount::*;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> AdjacencyMatrix {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, edges).unwrap()
}

pub fn random_partition(n: usize, k: usize, rng: &mut impl Rng) -> Partition {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let z = Partition::new(k, labels).unwrap();
        if z.empty_groups().is_empty() {
            return z;
        }
    }
}

/// Displayed MLE formulas evaluated pair by pair with no shared state.
pub fn naive_p_hat(adj: &AdjacencyMatrix, z: &Partition) -> DMatrix<f64> {
    let n = adj.n();
    let k = z.k();
    let d: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| adj.get(i, j) as f64).sum())
        .collect();
    let mut o = vec![vec![0.0; k]; k];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                o[z.label(i)][z.label(j)] += adj.get(i, j) as f64;
            }
        }
    }
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (z.label(i), z.label(j));
            p[(i, j)] = if a != b {
                let ra: f64 = o[a].iter().sum();
                let rb: f64 = o[b].iter().sum();
                o[a][b] * d[i] * d[j] / (ra * rb)
            } else {
                let mut den = 0.0;
                for u in 0..n {
                    for v in 0..n {
                        if u != v && z.label(u) == a && z.label(v) == a {
                            den += d[u] * d[v];
                        }
                    }
                }
                if den == 0.0 {
                    0.0
                } else {
                    o[a][a] * d[i] * d[j] / den
                }
            };
        }
    }
    p
}

pub fn naive_pseudo_lr(adj: &AdjacencyMatrix, coarse: &Partition, refined: &Partition) -> f64 {
    let base = naive_p_hat(adj, coarse);
    let alt = naive_p_hat(adj, refined);
    let mut total = 0.0;
    for i in 0..adj.n() {
        for j in 0..adj.n() {
            if i != j && base[(i, j)] > 0.0 {
                total += (alt[(i, j)] / base[(i, j)] - 1.0).powi(2);
            }
        }
    }
    0.5 * total
}

pub fn refine_randomly(z: &Partition, rng: &mut impl Rng) -> Option<Partition> {
    let groups = z.groups();
    let g = (0..z.k()).find(|&g| groups[g].len() >= 2)?;
    let mut members = groups[g].clone();
    members.shuffle(rng);
    let cut = rng.random_range(1..members.len());
    let mut labels = z.labels().to_vec();
    for &i in &members[cut..] {
        labels[i] = z.k();
    }
    Some(Partition::new(z.k() + 1, labels).unwrap())
}

pub fn brute_force_two_means(points: &PointSet) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << (n - 1)) {
        let left: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let right: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) == 0).collect();
        best = best.min(within_ss(points, &left).unwrap() + within_ss(points, &right).unwrap());
    }
    best
}
