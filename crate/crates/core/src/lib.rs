//! Estimating the number of communities in degree-corrected stochastic
//! block models.
//!
//! The pipeline embeds nodes with the leading eigenvectors of a regularised
//! graph Laplacian, clusters them into K groups with k-means, refines that
//! partition into K + 1 groups by binary segmentation, and compares the two
//! fitted models through a pseudo likelihood ratio. The ratio of successive
//! pseudo likelihood ratios drops sharply once K reaches the true number of
//! communities; [`select_k`] turns that drop into the estimates `K1` and
//! `K2`.
//!
//! ```no_run
//! use blockcount::{load_edge_list, select_k, EdgeListFormat, SelectionConfig};
//! use rand::SeedableRng;
//!
//! let graph = load_edge_list("network.txt", EdgeListFormat::Whitespace)?;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let trace = select_k(&graph.adjacency, &SelectionConfig::default(), &mut rng)?;
//! println!("K1={} K2={}", trace.k1, trace.k2);
//! # Ok::<(), blockcount::Error>(())
//! ```

pub mod clustering;
pub mod dcsbm;
pub mod error;
pub mod graph;
pub mod partition;
pub mod plr;
pub mod simulate;
pub mod spectral;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use clustering::{
    binary_segment, enforce_min_size, kmeans, within_ss, KmeansResult, PointSet, Segmentation,
};
pub use dcsbm::{
    edge_probabilities, make_s1_block, make_s2_block, normalize_theta, sample_adjacency,
    sample_membership, sample_theta, BlockMatrix, DegreeParams, Design, EdgeProbabilities,
    ModelConfig, Realization, ThetaLaw,
};
pub use error::{Error, Result};
pub use graph::{
    degree_profile, load_edge_list, parse_edge_list, AdjacencyMatrix, DegreeProfile,
    EdgeListFormat, LoadedGraph, NodeMap,
};
pub use partition::Partition;
pub use plr::{
    block_sums, estimators, fit_dcsbm, fit_dcsbm_with, pseudo_lr, pseudo_lr_with, report_fit,
    select_k, BlockSums, FitOptions, FitReport, FittedDcsbm, KStep, SelectionConfig,
    SelectionTrace,
};
pub use simulate::{
    run_replications, run_sensitivity, summarize, write_summary_csv, ReplicationOutcome,
    SimulationConfig, SummaryRow,
};
pub use spectral::{
    eigendecompose, regularized_laplacian, EmbeddingRows, RegularizedLaplacian, SpectralEmbedding,
};

/// Deterministic random stream `index` derived from `seed`.
///
/// Replication `r` of a run with master seed `s` uses `stream_rng(s, r)`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
