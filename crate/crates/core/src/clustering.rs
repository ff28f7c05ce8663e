//! K-means and the binary-segmentation refinement of a K-partition into
//! K + 1 groups.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

pub const DEFAULT_RESTARTS: usize = 20;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Row-major collection of equal-length points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot form points of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("ragged point rows".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            data,
        }
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared deviations from the mean over `members`.
pub fn within_ss(points: &PointSet, members: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidArgument(
            "within-group sum of squares of an empty set".into(),
        ));
    }
    let dim = points.dim();
    let mut mean = vec![0.0; dim];
    for &i in members {
        for (m, v) in mean.iter_mut().zip(points.row(i)) {
            *m += v;
        }
    }
    let count = members.len() as f64;
    mean.iter_mut().for_each(|m| *m /= count);
    Ok(members.iter().map(|&i| sq_dist(points.row(i), &mean)).sum())
}

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub objective: f64,
    /// Objective after each assignment step of the winning Lloyd run.
    pub history: Vec<f64>,
}

impl KmeansResult {
    pub fn empty_groups(&self) -> Vec<usize> {
        self.partition.empty_groups()
    }
}

/// Best of `restarts` Lloyd runs from k-means++ seeds.
///
/// Points go to their nearest centroid with ties to the lowest index. When
/// fewer than `k` distinct points exist the result may contain empty
/// groups; callers check [`KmeansResult::empty_groups`].
pub fn kmeans<R: Rng + ?Sized>(
    points: &PointSet,
    k: usize,
    rng: &mut R,
    restarts: usize,
) -> Result<KmeansResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k-means needs k >= 1".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "k-means on an empty point set".into(),
        ));
    }
    let mut best: Option<KmeansResult> = None;
    for _ in 0..restarts.max(1) {
        let seeds = plus_plus_seeds(points, k, rng);
        let run = lloyd(points, seeds, MAX_LLOYD_ITERATIONS);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_seeds<R: Rng + ?Sized>(points: &PointSet, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points.row(rng.random_range(0..n)).to_vec());
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave target above the final cumulative sum
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &PointSet, centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut objective = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let x = points.row(i);
        let mut best = 0;
        let mut best_d = sq_dist(x, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = sq_dist(x, centroid);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        *label = best;
        objective += best_d;
    }
    objective
}

/// Replaces each non-empty centroid by its group mean. Returns group sizes.
fn update_means(points: &PointSet, labels: &[usize], centroids: &mut [Vec<f64>]) -> Vec<usize> {
    let k = centroids.len();
    let dim = points.dim();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &g) in labels.iter().enumerate() {
        counts[g] += 1;
        for (s, v) in sums[g].iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for ((c, s), &m) in centroids.iter_mut().zip(sums).zip(&counts) {
        if m > 0 {
            *c = s.into_iter().map(|v| v / m as f64).collect();
        }
    }
    counts
}

fn objective_of(points: &PointSet, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &g)| sq_dist(points.row(i), &centroids[g]))
        .sum()
}

/// Moves the point farthest from its centroid into each empty group. Only
/// points from groups with at least two members are eligible.
fn repair_empty(
    points: &PointSet,
    labels: &mut [usize],
    centroids: &mut [Vec<f64>],
    counts: &mut [usize],
) -> bool {
    let mut changed = false;
    for empty in 0..centroids.len() {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] >= 2)
            .map(|i| (i, sq_dist(points.row(i), &centroids[labels[i]])))
            .fold(None::<(usize, f64)>, |acc, (i, d)| match acc {
                Some((_, bd)) if bd >= d => acc,
                _ => Some((i, d)),
            });
        let Some((i, _)) = donor else { break };
        let from = labels[i];
        counts[from] -= 1;
        counts[empty] = 1;
        labels[i] = empty;
        centroids[empty] = points.row(i).to_vec();
        changed = true;
    }
    if changed {
        update_means(points, labels, centroids);
    }
    changed
}

fn lloyd(points: &PointSet, mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KmeansResult {
    let n = points.len();
    let k = centroids.len();
    let mut labels = vec![0; n];
    let mut objective = assign(points, &centroids, &mut labels);
    let mut history = vec![objective];
    let mut next = vec![0; n];
    for _ in 0..max_iter {
        let mut counts = update_means(points, &labels, &mut centroids);
        repair_empty(points, &mut labels, &mut centroids, &mut counts);
        let new_objective = assign(points, &centroids, &mut next);
        debug_assert!(
            new_objective <= objective + 1e-9 * objective.max(1.0),
            "Lloyd objective increased: {objective} -> {new_objective}"
        );
        objective = new_objective;
        history.push(objective);
        if next == labels {
            break;
        }
        std::mem::swap(&mut labels, &mut next);
    }
    let objective = objective_of(points, &labels, &centroids);
    KmeansResult {
        partition: Partition::new(k, labels).expect("labels below k"),
        centroids,
        objective,
        history,
    }
}

/// Outcome of one binary-segmentation step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segmentation {
    /// The refined K + 1 partition.
    pub partition: Partition,
    /// Per-group split gain; `-inf` for groups that cannot be split.
    pub scores: Vec<f64>,
    /// Index of the group that was split. Its first half keeps this label
    /// and its second half becomes the last group.
    pub split_group: usize,
}

fn derived_rng(base: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Splits every group of `coarse` in two by 2-means on `rows` and refines
/// the group with the largest normalised drop in within-group scatter.
pub fn binary_segment<R: Rng + ?Sized>(
    coarse: &Partition,
    rows: &PointSet,
    rng: &mut R,
    restarts: usize,
) -> Result<Segmentation> {
    coarse.require_nonempty()?;
    if rows.len() != coarse.n() {
        return Err(Error::InvalidArgument(
            "embedding rows and partition disagree on n".into(),
        ));
    }
    let base: u64 = rng.random();
    let groups = coarse.groups();
    let mut scores = Vec::with_capacity(groups.len());
    let mut splits = Vec::with_capacity(groups.len());
    for (g, members) in groups.iter().enumerate() {
        if members.len() < 2 {
            scores.push(f64::NEG_INFINITY);
            splits.push(None);
            continue;
        }
        let sub = rows.subset(members);
        let fit = kmeans(&sub, 2, &mut derived_rng(base, g), restarts)?;
        let (mut first, mut second): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
        for (local, &node) in members.iter().enumerate() {
            if fit.partition.label(local) == 0 {
                first.push(node);
            } else {
                second.push(node);
            }
        }
        if first.is_empty() || second.is_empty() {
            // only happens when every row in the group coincides
            let mut all = [first, second].concat();
            let last = all.pop().expect("group has members");
            first = all;
            second = vec![last];
        }
        let gain = within_ss(rows, members)? - within_ss(rows, &first)? - within_ss(rows, &second)?;
        // any two-way split lowers within-group scatter; clamp rounding noise
        scores.push(gain.max(0.0) / members.len() as f64);
        splits.push(Some(second));
    }
    let split_group = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .fold(None::<(usize, f64)>, |acc, (g, &s)| match acc {
            Some((_, best)) if best >= s => acc,
            _ => Some((g, s)),
        })
        .map(|(g, _)| g)
        .ok_or(Error::CannotRefine)?;

    let k = coarse.k();
    let mut labels = coarse.labels().to_vec();
    for &node in splits[split_group]
        .as_ref()
        .expect("chosen group was split")
    {
        labels[node] = k;
    }
    Ok(Segmentation {
        partition: Partition::new(k + 1, labels)?,
        scores,
        split_group,
    })
}

/// Rebalances the two groups created by a segmentation step when the
/// smaller one holds fewer than `epsilon * n` nodes: a uniformly random
/// half of the larger group moves into the smaller one. `epsilon <= 0`
/// disables the check.
pub fn enforce_min_size<R: Rng + ?Sized>(
    seg: &Segmentation,
    epsilon: f64,
    rng: &mut R,
) -> Partition {
    let p = &seg.partition;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return p.clone();
    }
    let groups = p.groups();
    let (a, b) = (seg.split_group, p.k() - 1);
    let (small, large) = if groups[a].len() <= groups[b].len() {
        (a, b)
    } else {
        (b, a)
    };
    if (groups[small].len() as f64) >= epsilon * p.n() as f64 {
        return p.clone();
    }
    let donors = &groups[large];
    let mut labels = p.labels().to_vec();
    for pos in index::sample(rng, donors.len(), donors.len() / 2) {
        labels[donors[pos]] = small;
    }
    Partition::new(p.k(), labels).expect("labels unchanged in range")
}
