use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Bohr spec: {0}")]
    InvalidSpec(String),

    #[error("{what}: needs {needed} work units, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("grid of {grid} points is too coarse (need at least {needed})")]
    GridTooCoarse { grid: usize, needed: usize },

    #[error("set contains the nontrivial configuration {0:?}")]
    ConfigurationExists(crate::patterns::Configuration),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
