use std::fmt;

use thiserror::Error;

/// Which evaluation path produced a failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalPath {
    Primal,
    Alternate,
}

impl fmt::Display for EvalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalPath::Primal => f.write_str("primal"),
            EvalPath::Alternate => f.write_str("alternate"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("parameter outside the distribution's domain: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("index {index} out of bounds for length {len} on the {path} path")]
    Index { path: EvalPath, index: i64, len: usize },

    #[error("evaluation produced a non-finite value on the {path} path ({what})")]
    Evaluation { path: EvalPath, what: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
