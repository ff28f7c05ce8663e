//! Fitted DCSBM edge probabilities, the pseudo likelihood ratio between a
//! K-group fit and its (K + 1)-group refinement, and the resulting
//! estimators of the number of communities.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{binary_segment, enforce_min_size, kmeans, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::graph::{degree_profile, AdjacencyMatrix};
use crate::partition::Partition;
use crate::spectral::{eigendecompose, regularized_laplacian};

/// Ordered-pair edge counts between and within groups, plus the degree
/// aggregates the fitted probabilities need.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSums {
    k: usize,
    /// `o[k][l] = sum_{i in k} sum_{j in l, j != i} A_ij`.
    o: Vec<u64>,
    sizes: Vec<usize>,
    degree_sums: Vec<u64>,
    /// `sum_{i != j in k} d_i d_j`.
    intra_products: Vec<u64>,
}

impl BlockSums {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn o(&self, a: usize, b: usize) -> u64 {
        self.o[a * self.k + b]
    }

    pub fn size(&self, a: usize) -> usize {
        self.sizes[a]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn degree_sum(&self, a: usize) -> u64 {
        self.degree_sums[a]
    }

    pub fn intra_product(&self, a: usize) -> u64 {
        self.intra_products[a]
    }

    /// Ordered node pairs between groups `a` and `b` (distinct nodes).
    pub fn pair_count(&self, a: usize, b: usize) -> u64 {
        let (na, nb) = (self.sizes[a] as u64, self.sizes[b] as u64);
        if a == b {
            na * na.saturating_sub(1)
        } else {
            na * nb
        }
    }
}

pub fn block_sums(adj: &AdjacencyMatrix, z: &Partition) -> Result<BlockSums> {
    if z.n() != adj.n() {
        return Err(Error::InvalidArgument(
            "partition and graph disagree on n".into(),
        ));
    }
    z.require_nonempty()?;
    let k = z.k();
    let mut o = vec![0u64; k * k];
    for (i, j) in adj.edges() {
        let (a, b) = (z.label(i), z.label(j));
        o[a * k + b] += 1;
        o[b * k + a] += 1;
    }
    let mut degree_sums = vec![0u64; k];
    let mut squares = vec![0u64; k];
    for i in 0..adj.n() {
        let d = adj.degree(i) as u64;
        degree_sums[z.label(i)] += d;
        squares[z.label(i)] += d * d;
    }
    let intra_products = degree_sums
        .iter()
        .zip(&squares)
        .map(|(&s, &q)| s * s - q)
        .collect();
    Ok(BlockSums {
        k,
        o,
        sizes: z.sizes(),
        degree_sums,
        intra_products,
    })
}

/// Exploratory knobs for fitting; defaults reproduce the plain MLE.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Floors every block count at this value before forming probabilities.
    pub epsilon_floor: Option<f64>,
}

/// DCSBM maximum-likelihood fit for a fixed partition.
#[derive(Clone, Debug)]
pub struct FittedDcsbm {
    pub partition: Partition,
    pub sums: BlockSums,
    degrees: Vec<usize>,
    theta_hat: Vec<f64>,
    b_hat: Vec<f64>,
    /// `P_ij = factor[g_i][g_j] * d_i * d_j`.
    factor: Vec<f64>,
}

impl FittedDcsbm {
    pub fn k(&self) -> usize {
        self.sums.k
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn b_hat(&self, a: usize, b: usize) -> f64 {
        self.b_hat[a * self.k() + b]
    }

    /// Degree-free part of the fitted probability between groups `a` and `b`.
    pub fn block_factor(&self, a: usize, b: usize) -> f64 {
        self.factor[a * self.k() + b]
    }

    /// Fitted `P_ij` for `i != j`.
    pub fn p_hat(&self, i: usize, j: usize) -> f64 {
        let f = self.block_factor(self.partition.label(i), self.partition.label(j));
        f * (self.degrees[i] * self.degrees[j]) as f64
    }
}

pub fn fit_dcsbm(adj: &AdjacencyMatrix, z: &Partition) -> Result<FittedDcsbm> {
    fit_dcsbm_with(adj, z, &FitOptions::default())
}

/// Fitted probabilities are `O_kl d_i d_j / (S_k S_l)` across groups and
/// `O_kk d_i d_j / sum_{i' != j' in k} d_i' d_j'` within a group, where
/// `S_k` is the row sum of `O`.
pub fn fit_dcsbm_with(
    adj: &AdjacencyMatrix,
    z: &Partition,
    opts: &FitOptions,
) -> Result<FittedDcsbm> {
    let sums = block_sums(adj, z)?;
    let k = sums.k;
    if let Some(g) = (0..k).find(|&g| sums.degree_sums[g] == 0) {
        return Err(Error::DegenerateGroup(g));
    }
    let floor = opts.epsilon_floor.unwrap_or(0.0).max(0.0);
    let o: Vec<f64> = sums.o.iter().map(|&v| (v as f64).max(floor)).collect();
    let row_sums: Vec<f64> = (0..k).map(|a| o[a * k..(a + 1) * k].iter().sum()).collect();

    let mut factor = vec![0.0; k * k];
    let mut b_hat = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let oab = o[a * k + b];
            factor[a * k + b] = if a != b {
                oab / (row_sums[a] * row_sums[b])
            } else {
                let t = sums.intra_products[a] as f64;
                if t > 0.0 {
                    oab / t
                } else if oab > 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "group {a} has within-group edges but no degree products"
                    )));
                } else {
                    0.0
                }
            };
            let pairs = sums.pair_count(a, b) as f64;
            b_hat[a * k + b] = if pairs > 0.0 { oab / pairs } else { 0.0 };
        }
    }
    let degrees: Vec<usize> = (0..adj.n()).map(|i| adj.degree(i)).collect();
    let theta_hat = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let g = z.label(i);
            d as f64 * sums.sizes[g] as f64 / sums.degree_sums[g] as f64
        })
        .collect();
    Ok(FittedDcsbm {
        partition: z.clone(),
        sums,
        degrees,
        theta_hat,
        b_hat,
        factor,
    })
}

/// `0.5 * sum_{i != j} (P_ij(refined) / P_ij(coarse) - 1)^2`.
pub fn pseudo_lr(adj: &AdjacencyMatrix, coarse: &Partition, refined: &Partition) -> Result<f64> {
    pseudo_lr_with(adj, coarse, refined, &FitOptions::default())
}

pub fn pseudo_lr_with(
    adj: &AdjacencyMatrix,
    coarse: &Partition,
    refined: &Partition,
    opts: &FitOptions,
) -> Result<f64> {
    let base = fit_dcsbm_with(adj, coarse, opts)?;
    let alt = fit_dcsbm_with(adj, refined, opts)?;
    pseudo_lr_from_fits(&base, &alt)
}

/// Both fits share the degree factors `d_i d_j`, so the ratio of fitted
/// probabilities only depends on which (coarse, refined) group pair each
/// endpoint falls in. Nodes are pooled into those cells and the pairwise
/// sum is taken over cell pairs. Pairs with a zero-degree endpoint have both
/// probabilities zero and contribute nothing.
pub fn pseudo_lr_from_fits(base: &FittedDcsbm, alt: &FittedDcsbm) -> Result<f64> {
    let n = base.partition.n();
    if alt.partition.n() != n {
        return Err(Error::InvalidArgument("fits disagree on n".into()));
    }
    let mut cell_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cells: Vec<(usize, usize, u64)> = Vec::new();
    for i in (0..n).filter(|&i| base.degrees[i] > 0) {
        let key = (base.partition.label(i), alt.partition.label(i));
        let idx = *cell_of.entry(key).or_insert_with(|| {
            cells.push((key.0, key.1, 0));
            cells.len() - 1
        });
        cells[idx].2 += 1;
    }
    let mut total = 0.0;
    for &(ga, ra, ca) in &cells {
        for &(gb, rb, cb) in &cells {
            let pairs = if (ga, ra) == (gb, rb) {
                ca * (ca - 1)
            } else {
                ca * cb
            };
            if pairs == 0 {
                continue;
            }
            let den = base.block_factor(ga, gb);
            let num = alt.block_factor(ra, rb);
            if den == 0.0 {
                if num == 0.0 {
                    continue;
                }
                return Err(Error::ZeroDenominatorBlock(ga, gb));
            }
            let dev = num / den - 1.0;
            total += pairs as f64 * dev * dev;
        }
    }
    Ok(0.5 * total)
}

/// Estimated block matrix with group sizes, for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub sizes: Vec<usize>,
    pub b_hat: Vec<Vec<f64>>,
}

pub fn report_fit(adj: &AdjacencyMatrix, z: &Partition) -> Result<FitReport> {
    let fit = fit_dcsbm(adj, z)?;
    let k = fit.k();
    Ok(FitReport {
        sizes: fit.sums.sizes.clone(),
        b_hat: (0..k)
            .map(|a| (0..k).map(|b| fit.b_hat(a, b)).collect())
            .collect(),
    })
}

impl FitReport {
    /// Rows of `group,size,B_0,...,B_{k-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["group".to_string(), "size".to_string()];
        header.extend((0..self.sizes.len()).map(|b| format!("B_{b}")));
        out.write_record(&header)?;
        for (a, row) in self.b_hat.iter().enumerate() {
            let mut rec = vec![a.to_string(), self.sizes[a].to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "group sizes: {:?}", self.sizes)?;
        for row in &self.b_hat {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            writeln!(f, "  {}", cells.join("  "))?;
        }
        Ok(())
    }
}

/// Tuning for [`select_k`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_max: usize,
    pub c_eta: f64,
    pub c_h: f64,
    /// Laplacian regulariser; the sample average degree when `None`.
    pub tau: Option<f64>,
    pub restarts: usize,
    /// Minimum size fraction for freshly split groups; `0` disables it.
    pub min_group_frac: f64,
    pub fit: FitOptions,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k_max: 10,
            c_eta: 0.05,
            c_h: 1.0,
            tau: None,
            restarts: DEFAULT_RESTARTS,
            min_group_frac: 0.0,
            fit: FitOptions::default(),
        }
    }
}

/// Per-K record in a [`SelectionTrace`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KStep {
    #[serde(rename = "K")]
    pub k: usize,
    /// Pseudo-LR between the K-group fit and its refinement.
    #[serde(rename = "L_n")]
    pub l_n: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Spectral K-partition.
    #[serde(skip)]
    pub partition: Option<Partition>,
    /// Segmented (K + 1)-partition.
    #[serde(skip)]
    pub refined: Option<Partition>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub n: usize,
    pub tau: f64,
    pub c_eta: f64,
    pub c_h: f64,
    pub eta_n: f64,
    pub h_n: f64,
    pub average_degree: f64,
    #[serde(rename = "per_K")]
    pub per_k: Vec<KStep>,
    #[serde(rename = "K1")]
    pub k1: usize,
    #[serde(rename = "K2_tilde")]
    pub k2_tilde: usize,
    #[serde(rename = "K2")]
    pub k2: usize,
}

impl SelectionTrace {
    pub fn k_max(&self) -> usize {
        self.per_k.len()
    }

    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.per_k.iter().map(|s| s.r).collect()
    }

    pub fn ratio(&self, k: usize) -> Option<f64> {
        self.per_k.get(k.checked_sub(1)?).and_then(|s| s.r)
    }

    /// Spectral partition at `k`, if that step succeeded.
    pub fn partition(&self, k: usize) -> Option<&Partition> {
        self.per_k.get(k.checked_sub(1)?)?.partition.as_ref()
    }

    /// Same trace thresholded with a different `c_h`; nothing is refitted.
    pub fn with_c_h(&self, c_h: f64) -> Self {
        let h_n = threshold(c_h, self.average_degree);
        let (k1, k2_tilde, k2) =
            estimators(&self.ratios(), h_n).expect("trace already has a valid ratio");
        Self {
            c_h,
            h_n,
            k1,
            k2_tilde,
            k2,
            ..self.clone()
        }
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// `h_n = c_h / sqrt(average degree)`.
pub fn threshold(c_h: f64, average_degree: f64) -> f64 {
    c_h / average_degree.sqrt()
}

/// `(K1, K2_tilde, K2)` from per-K ratios (index 0 is K = 1). Missing
/// ratios are skipped; ties favour the smaller K. `None` when no ratio is
/// available.
pub fn estimators(ratios: &[Option<f64>], h_n: f64) -> Option<(usize, usize, usize)> {
    let valid = || {
        ratios
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.filter(|v| !v.is_nan()).map(|v| (i + 1, v)))
    };
    let (k1, _) = valid().fold(None::<(usize, f64)>, |acc, (k, r)| match acc {
        Some((_, best)) if best <= r => acc,
        _ => Some((k, r)),
    })?;
    let k2_tilde = valid()
        .find(|&(_, r)| r <= h_n)
        .map_or(ratios.len(), |(k, _)| k);
    Some((k1, k2_tilde, k1.min(k2_tilde)))
}

/// Runs spectral clustering with binary segmentation for `K = 1..=k_max`
/// and turns the chain of pseudo-LRs into `R(K)` and the estimators.
///
/// A K whose clustering or fit fails is recorded with its error and left
/// out of the minimisation, as is the following K whose ratio needs it.
pub fn select_k<R: Rng + ?Sized>(
    adj: &AdjacencyMatrix,
    cfg: &SelectionConfig,
    rng: &mut R,
) -> Result<SelectionTrace> {
    if cfg.k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if cfg.c_eta.is_nan() || cfg.c_eta <= 0.0 || cfg.c_h.is_nan() || cfg.c_h < 0.0 {
        return Err(Error::InvalidArgument(
            "c_eta must be positive and c_h non-negative".into(),
        ));
    }
    let n = adj.n();
    let average_degree = degree_profile(adj).average();
    let tau = cfg.tau.unwrap_or(average_degree);
    let embedding = eigendecompose(&regularized_laplacian(adj, tau)?)?;
    let eta_n = cfg.c_eta * (n as f64) * (n as f64);
    let h_n = threshold(cfg.c_h, average_degree);

    let base: u64 = rng.random();
    let mut per_k: Vec<KStep> = Vec::with_capacity(cfg.k_max);
    for k in 1..=cfg.k_max {
        let mut step_rng = crate::stream_rng(base, k as u64);
        let step = (|| -> Result<(Partition, Partition, f64)> {
            let partition = if k == 1 {
                Partition::single(n)
            } else {
                let rows = embedding.embedding_rows(k)?;
                let fit = kmeans(&rows.points, k, &mut step_rng, cfg.restarts)?;
                fit.partition.require_nonempty()?;
                fit.partition
            };
            let rows = embedding.embedding_rows(k + 1)?;
            let seg = binary_segment(&partition, &rows.points, &mut step_rng, cfg.restarts)?;
            let refined = enforce_min_size(&seg, cfg.min_group_frac, &mut step_rng);
            let l_n = pseudo_lr_with(adj, &partition, &refined, &cfg.fit)?;
            Ok((partition, refined, l_n))
        })();
        per_k.push(match step {
            Ok((partition, refined, l_n)) => KStep {
                k,
                l_n: Some(l_n),
                r: None,
                error: None,
                partition: Some(partition),
                refined: Some(refined),
            },
            Err(e) => {
                log::warn!("K = {k} skipped: {e}");
                KStep {
                    k,
                    l_n: None,
                    r: None,
                    error: Some(e.to_string()),
                    partition: None,
                    refined: None,
                }
            }
        });
    }
    for k in 1..=cfg.k_max {
        let num = per_k[k - 1].l_n;
        let den = if k == 1 {
            Some(eta_n)
        } else {
            per_k[k - 2].l_n
        };
        per_k[k - 1].r = match (num, den) {
            (Some(num), Some(den)) => ratio(num, den),
            _ => None,
        };
    }
    let ratios: Vec<Option<f64>> = per_k.iter().map(|s| s.r).collect();
    let (k1, k2_tilde, k2) = estimators(&ratios, h_n).ok_or(Error::AllFailed(cfg.k_max))?;
    Ok(SelectionTrace {
        n,
        tau,
        c_eta: cfg.c_eta,
        c_h: cfg.c_h,
        eta_n,
        h_n,
        average_degree,
        per_k,
        k1,
        k2_tilde,
        k2,
    })
}

/// `0 / 0` is undefined; a positive numerator over zero is `+inf`.
fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 {
        Some(num / den)
    } else if num > 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    }
}
