use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("k = {k} exceeds the configured cap {cap} ({states} patterns)")]
    Capacity { k: usize, cap: usize, states: u64 },

    #[error("operation requires a cycle graph")]
    NotACycle,

    #[error("probability {0} outside its admissible range {1}")]
    ProbabilityOutOfRange(f64, &'static str),

    #[error("pattern {0} is not in the state space")]
    UnknownState(String),

    #[error("chain structure: {0}")]
    Structure(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("surviving mass vanished at step {0}")]
    Extinction(usize),

    #[error("onset bound is unbounded: c_nu * c_nu' = 0")]
    Unbounded,

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
