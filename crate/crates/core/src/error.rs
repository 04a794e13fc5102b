use thiserror::Error;

/// Errors produced by the solvers, oracles and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `|y* F'(λ) x|` is numerically zero, so the eigenvalue is multiple or
    /// defective and cannot take part in selection.
    #[error("eigenvalue looks defective or multiple: |y*F'(λ)x| = {denom:e} (threshold {threshold:e})")]
    Defective { denom: f64, threshold: f64 },

    #[error("matrix is singular to working precision ({0}); try a shifted target")]
    Singular(String),

    #[error("degenerate projective configuration: {0}")]
    Degenerate(String),

    #[error("null vector iteration made no progress after {0} attempts")]
    NoProgress(usize),

    #[error("problem size {size} exceeds the oracle cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("dense eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
