use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("capacity exceeded: {what} ({count} > {limit})")]
    Capacity {
        what: &'static str,
        count: u128,
        limit: u128,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("eigensolver did not converge after {iterations} sweeps (off-diagonal norm {residual:e})")]
    Numerical { iterations: usize, residual: f64 },

    #[error("split error: {0}")]
    Split(String),

    #[error("ranking error: {0}")]
    Ranking(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("training error in `{block}`: {msg}")]
    Training { block: String, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::Dimension { expected, got }
    }

    pub(crate) fn training(block: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Training {
            block: block.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by bad input or configuration rather than by a
    /// failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::Capacity { .. }
                | Error::Invalid(_)
                | Error::Parse { .. }
                | Error::Schema(_)
                | Error::Split(_)
                | Error::Config(_)
        )
    }
}
