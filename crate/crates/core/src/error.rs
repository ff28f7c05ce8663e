use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no edges")]
    EmptyGraph,

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no acceptable block matrix after {0} draws")]
    RejectionBudgetExhausted(usize),

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("degenerate group {0}: total degree is zero")]
    DegenerateGroup(usize),

    #[error("zero-denominator block: fitted probability is zero between groups {0} and {1} but positive after refinement")]
    ZeroDenominatorBlock(usize, usize),

    #[error("cannot refine partition: every group is a singleton")]
    CannotRefine,

    #[error("eigendecomposition did not converge")]
    EigenNonConvergence,

    #[error("model selection failed for every K in 1..={0}")]
    AllFailed(usize),

    #[error("every replication failed")]
    AllReplicationsFailed,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
