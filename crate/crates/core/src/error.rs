use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown problem `{0}` (expected one of four-branch, three-mode, two-mode, oscillator)")]
    UnknownProblem(String),

    #[error("problem `{problem}` requires dimension {expected}, got {got}")]
    Dimension {
        problem: String,
        expected: String,
        got: usize,
    },

    #[error("all mixture weights are non-positive after the penalized update")]
    AllWeightsPruned,

    #[error("limit-state evaluation diverged: {0}")]
    NonFinite(String),

    #[error("{0}")]
    EmptyInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
