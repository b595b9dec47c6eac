//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not {expected} (extremal eigenvalue {eigenvalue:.6e})")]
    NotDefinite { expected: &'static str, eigenvalue: f64 },

    #[error("weight matrix too ill-conditioned (cond {cond:.3e} > {max:.3e})")]
    IllConditioned { cond: f64, max: f64 },

    #[error("method unavailable: {0}")]
    MethodUnavailable(String),

    #[error("{lambda} is not in the resolvent set (nearest eigenvalue {nearest})")]
    Resolvent { lambda: f64, nearest: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
