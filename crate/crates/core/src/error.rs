use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Both index pairs coincide; the caller wants `fourth_moment`.
    #[error("identical index pair (m={m}, k={k}); use fourth_moment instead")]
    IdenticalIndexPair { m: usize, k: usize },

    #[error("training diverged at episode {episode}, step {step}: {reason}")]
    Divergence {
        episode: usize,
        step: usize,
        reason: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
