//! Degree-corrected stochastic block models and the two simulation designs.
//!
//! Edge probabilities are `P_ij = theta_i * theta_j * B[g_i][g_j]` for
//! `i != j`. Degree parameters are normalised so that they sum to the group
//! size inside every group, which pins down the scale shared between
//! `theta` and `B`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Pareto, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::partition::Partition;

/// Draw budget for the design-2 rejection sampler.
pub const S2_REJECTION_BUDGET: usize = 10_000;
/// Smallest singular value an accepted design-2 block matrix must reach.
pub const S2_MIN_SINGULAR_VALUE: f64 = 0.1;
const S2_UPPER: f64 = 0.3;

/// Symmetric `k x k` matrix of block probabilities in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl BlockMatrix {
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if k == 0 || entries.len() != k * k {
            return Err(Error::InvalidModel(format!(
                "block matrix needs {} entries",
                k * k
            )));
        }
        for a in 0..k {
            for b in 0..k {
                let v = entries[a * k + b];
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::InvalidModel(format!(
                        "B[{a}][{b}] = {v} is outside (0, 1]"
                    )));
                }
                if v != entries[b * k + a] {
                    return Err(Error::InvalidModel(format!(
                        "B is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { k, entries })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.k + b]
    }

    pub fn smallest_singular_value(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.k, self.k, &self.entries);
        m.singular_values().min()
    }
}

/// Positive per-node degree parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeParams(Vec<f64>);

impl DegreeParams {
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn group_sums(&self, membership: &Partition) -> Vec<f64> {
        let mut sums = vec![0.0; membership.k()];
        for (i, &t) in self.0.iter().enumerate() {
            sums[membership.label(i)] += t;
        }
        sums
    }
}

/// Scales `raw` so that each group's parameters sum to the group size.
pub fn normalize_theta(raw: &[f64], membership: &Partition) -> Result<DegreeParams> {
    if raw.len() != membership.n() {
        return Err(Error::InvalidModel(
            "theta length differs from node count".into(),
        ));
    }
    if let Some((i, v)) = raw
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidModel(format!(
            "raw degree parameter {i} is {v}"
        )));
    }
    membership.require_nonempty()?;
    let sizes = membership.sizes();
    let mut sums = vec![0.0; membership.k()];
    for (i, &v) in raw.iter().enumerate() {
        sums[membership.label(i)] += v;
    }
    let theta = raw
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let g = membership.label(i);
            v * sizes[g] as f64 / sums[g]
        })
        .collect();
    Ok(DegreeParams(theta))
}

/// Design 1: `B_kl = 0.5 * rho / sqrt(n) * (1 + [k == l])`.
pub fn make_s1_block(k: usize, rho: f64, n: usize) -> Result<BlockMatrix> {
    if k == 0 || n == 0 || !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "invalid design-1 inputs k={k} rho={rho} n={n}"
        )));
    }
    let off = 0.5 * rho / (n as f64).sqrt();
    let diag = 2.0 * off;
    if diag > 1.0 {
        return Err(Error::InvalidModel(format!(
            "rho / sqrt(n) = {diag} exceeds 1; block probabilities would be invalid"
        )));
    }
    let entries = (0..k * k)
        .map(|idx| if idx / k == idx % k { diag } else { off })
        .collect();
    BlockMatrix::new(k, entries)
}

/// Design 2: the `k` largest of `k(k+1)/2` draws from `U[0, 0.3]` go on the
/// diagonal (in draw order), the rest fill the upper triangle row by row.
/// Redrawn until the smallest singular value is at least 0.1.
pub fn make_s2_block<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BlockMatrix> {
    make_s2_block_with_budget(k, rng, S2_REJECTION_BUDGET)
}

pub fn make_s2_block_with_budget<R: Rng + ?Sized>(
    k: usize,
    rng: &mut R,
    budget: usize,
) -> Result<BlockMatrix> {
    if k == 0 {
        return Err(Error::InvalidModel("design 2 needs k >= 1".into()));
    }
    let m0 = k * (k + 1) / 2;
    let unif = Uniform::new_inclusive(0.0, S2_UPPER).expect("valid uniform bounds");
    for _ in 0..budget {
        let draws: Vec<f64> = (0..m0).map(|_| unif.sample(rng)).collect();
        if draws.iter().any(|&w| w <= 0.0) {
            continue;
        }
        let mut order: Vec<usize> = (0..m0).collect();
        // stable: equal draws keep draw order
        order.sort_by(|&a, &b| draws[b].total_cmp(&draws[a]));
        let mut on_diag = vec![false; m0];
        for &idx in &order[..k] {
            on_diag[idx] = true;
        }
        let diag: Vec<f64> = (0..m0).filter(|&i| on_diag[i]).map(|i| draws[i]).collect();
        let mut rest = (0..m0).filter(|&i| !on_diag[i]).map(|i| draws[i]);

        let mut entries = vec![0.0; k * k];
        for a in 0..k {
            entries[a * k + a] = diag[a];
            for b in a + 1..k {
                let v = rest.next().expect("k(k-1)/2 off-diagonal draws");
                entries[a * k + b] = v;
                entries[b * k + a] = v;
            }
        }
        let block = BlockMatrix::new(k, entries)?;
        if block.smallest_singular_value() >= S2_MIN_SINGULAR_VALUE {
            return Ok(block);
        }
    }
    Err(Error::RejectionBudgetExhausted(budget))
}

/// Group probabilities used for `k0 = 1..=4`; equal weights otherwise.
pub fn membership_preset(k0: usize) -> Vec<f64> {
    match k0 {
        1 => vec![1.0],
        2 => vec![0.4, 0.6],
        3 => vec![0.3, 0.3, 0.4],
        4 => vec![0.25; 4],
        _ => vec![1.0 / k0 as f64; k0],
    }
}

/// Independent categorical labels.
pub fn sample_membership<R: Rng + ?Sized>(
    n: usize,
    probs: &[f64],
    rng: &mut R,
) -> Result<Partition> {
    if probs.is_empty() || probs.iter().any(|&p| p.is_nan() || p < 0.0) {
        return Err(Error::InvalidModel(
            "membership probabilities must be non-negative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidModel(format!(
            "membership probabilities sum to {total}"
        )));
    }
    let k = probs.len();
    let labels = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (g, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return g;
                }
            }
            // u landed in the rounding slack above the last cumulative sum
            (0..k).rev().find(|&g| probs[g] > 0.0).unwrap_or(k - 1)
        })
        .collect();
    Partition::new(k, labels)
}

/// Distribution of the raw (pre-normalisation) degree parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaLaw {
    /// `theta_i = 1`; the plain block model.
    #[default]
    Constant,
    /// `U(0.2, 1)`.
    Uniform,
    /// Pareto with density `5 / x^6` on `x >= 1`.
    Pareto,
}

pub fn sample_theta<R: Rng + ?Sized>(
    membership: &Partition,
    law: ThetaLaw,
    rng: &mut R,
) -> Result<DegreeParams> {
    let n = membership.n();
    let raw: Vec<f64> = match law {
        ThetaLaw::Constant => vec![1.0; n],
        ThetaLaw::Uniform => {
            let d = Uniform::new(0.2, 1.0).expect("valid uniform bounds");
            (0..n).map(|_| d.sample(rng)).collect()
        }
        ThetaLaw::Pareto => {
            let d = Pareto::new(1.0, 5.0).expect("valid pareto parameters");
            (0..n).map(|_| d.sample(rng)).collect()
        }
    };
    normalize_theta(&raw, membership)
}

/// Dense symmetric edge-probability matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbabilities {
    n: usize,
    entries: Vec<f64>,
}

impl EdgeProbabilities {
    pub fn from_dense(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidModel(
                "probability matrix has wrong size".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let p = entries[i * n + j];
                if !(0.0..=1.0).contains(&p) || p != entries[j * n + i] || (i == j && p != 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "invalid probability at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

pub fn edge_probabilities(
    block: &BlockMatrix,
    membership: &Partition,
    theta: &DegreeParams,
) -> Result<EdgeProbabilities> {
    let n = membership.n();
    if theta.values().len() != n || membership.k() != block.k() {
        return Err(Error::InvalidModel("inconsistent model dimensions".into()));
    }
    let t = theta.values();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let p = t[i] * t[j] * block.get(membership.label(i), membership.label(j));
            if p > 1.0 {
                return Err(Error::InvalidModel(format!("P[{i}][{j}] = {p} exceeds 1")));
            }
            entries[i * n + j] = p;
            entries[j * n + i] = p;
        }
    }
    Ok(EdgeProbabilities { n, entries })
}

/// Independent Bernoulli draws for `i < j`, mirrored.
pub fn sample_adjacency<R: Rng + ?Sized>(
    probs: &EdgeProbabilities,
    rng: &mut R,
) -> AdjacencyMatrix {
    let n = probs.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = rng.random();
            if u < probs.get(i, j) {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, edges).expect("indices are in range")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Design {
    S1,
    S2,
}

/// Data-generating process for one simulation cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub design: Design,
    #[serde(rename = "K0")]
    pub k0: usize,
    pub n: usize,
    /// Sparsity level for design 1; ignored by design 2.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub theta_law: ThetaLaw,
    /// Defaults to [`membership_preset`].
    #[serde(default)]
    pub membership_probs: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Design 2 only: draw a fresh block matrix for each replication
    /// instead of one per run.
    #[serde(default = "default_true")]
    pub redraw_block: bool,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    pub fn probs(&self) -> Vec<f64> {
        self.membership_probs
            .clone()
            .unwrap_or_else(|| membership_preset(self.k0))
    }

    pub fn block<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BlockMatrix> {
        match self.design {
            Design::S1 => {
                let rho = self
                    .rho
                    .ok_or_else(|| Error::InvalidModel("design S1 needs rho".into()))?;
                make_s1_block(self.k0, rho, self.n)
            }
            Design::S2 => make_s2_block(self.k0, rng),
        }
    }

    /// Draws a full realisation. `fixed_block` overrides the block matrix
    /// (used when design 2 is not redrawn per replication).
    pub fn generate<R: Rng + ?Sized>(
        &self,
        fixed_block: Option<&BlockMatrix>,
        rng: &mut R,
    ) -> Result<Realization> {
        let block = match fixed_block {
            Some(b) => b.clone(),
            None => self.block(rng)?,
        };
        let membership = sample_membership(self.n, &self.probs(), rng)?;
        let theta = sample_theta(&membership, self.theta_law, rng)?;
        let probs = edge_probabilities(&block, &membership, &theta)?;
        let adjacency = sample_adjacency(&probs, rng);
        Ok(Realization {
            block,
            membership,
            theta,
            adjacency,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub block: BlockMatrix,
    pub membership: Partition,
    pub theta: DegreeParams,
    pub adjacency: AdjacencyMatrix,
}
