//! Monte-Carlo replication of generate-then-estimate runs.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcsbm::{BlockMatrix, Design, ModelConfig, ThetaLaw};
use crate::error::{Error, Result};
use crate::plr::{select_k, SelectionConfig, SelectionTrace};
use crate::stream_rng;

/// Stream reserved for a block matrix shared by every replication.
const SHARED_BLOCK_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// The model's `seed` is the master seed of the run.
    pub model: ModelConfig,
    pub replications: usize,
    pub selection: SelectionConfig,
}

/// One replication: its index and either the selection trace or the error
/// that stopped it.
#[derive(Clone, Debug)]
pub struct ReplicationOutcome {
    pub index: usize,
    pub result: std::result::Result<SelectionTrace, String>,
}

/// Runs every replication in parallel. Replication `r` draws all of its
/// randomness from `stream_rng(seed, r)`, so results do not depend on
/// scheduling or thread count.
pub fn run_replications(cfg: &SimulationConfig) -> Result<Vec<ReplicationOutcome>> {
    if cfg.replications == 0 {
        return Err(Error::InvalidArgument(
            "at least one replication is required".into(),
        ));
    }
    let seed = cfg.model.seed;
    let shared: Option<BlockMatrix> = match (cfg.model.design, cfg.model.redraw_block) {
        (Design::S2, false) => Some(
            cfg.model
                .block(&mut stream_rng(seed, SHARED_BLOCK_STREAM))?,
        ),
        _ => None,
    };
    let outcomes = (0..cfg.replications)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(seed, index as u64);
            let result = cfg
                .model
                .generate(shared.as_ref(), &mut rng)
                .and_then(|real| select_k(&real.adjacency, &cfg.selection, &mut rng))
                .map_err(|e| {
                    log::warn!("replication {index} failed: {e}");
                    e.to_string()
                });
            ReplicationOutcome { index, result }
        })
        .collect();
    Ok(outcomes)
}

/// Mean estimate and proportion of correct estimates for one estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub design: String,
    pub model: String,
    pub n: usize,
    pub rho: Option<f64>,
    #[serde(rename = "K0")]
    pub k0: usize,
    pub estimator: String,
    pub c_h: f64,
    pub mean: f64,
    pub prop: f64,
    pub replications: usize,
    pub failures: usize,
}

fn model_label(law: ThetaLaw) -> &'static str {
    match law {
        ThetaLaw::Constant => "SBM",
        ThetaLaw::Uniform => "DCSBM",
        ThetaLaw::Pareto => "DCSBM-Pareto",
    }
}

/// PLR1 and PLR2 rows at threshold constant `c_h`, averaged over the
/// replications that completed.
pub fn summarize(
    cfg: &SimulationConfig,
    outcomes: &[ReplicationOutcome],
    c_h: f64,
) -> Result<Vec<SummaryRow>> {
    let traces: Vec<SelectionTrace> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .map(|t| t.with_c_h(c_h))
        .collect();
    if traces.is_empty() {
        return Err(Error::AllReplicationsFailed);
    }
    let failures = outcomes.len() - traces.len();
    let k0 = cfg.model.k0;
    let row = |name: &str, pick: fn(&SelectionTrace) -> usize| {
        let count = traces.len() as f64;
        let mean = traces.iter().map(|t| pick(t) as f64).sum::<f64>() / count;
        let hits = traces.iter().filter(|t| pick(t) == k0).count();
        SummaryRow {
            design: format!("{:?}", cfg.model.design),
            model: model_label(cfg.model.theta_law).to_string(),
            n: cfg.model.n,
            rho: match cfg.model.design {
                Design::S1 => cfg.model.rho,
                Design::S2 => None,
            },
            k0,
            estimator: name.to_string(),
            c_h,
            mean,
            prop: hits as f64 / count,
            replications: outcomes.len(),
            failures,
        }
    };
    Ok(vec![row("PLR1", |t| t.k1), row("PLR2", |t| t.k2)])
}

/// Summaries for each threshold constant in `grid`, all computed from one
/// set of replications.
pub fn run_sensitivity(cfg: &SimulationConfig, grid: &[f64]) -> Result<Vec<SummaryRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("the c_h grid is empty".into()));
    }
    let outcomes = run_replications(cfg)?;
    let mut rows = Vec::new();
    for &c_h in grid {
        rows.extend(summarize(cfg, &outcomes, c_h)?);
    }
    Ok(rows)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
