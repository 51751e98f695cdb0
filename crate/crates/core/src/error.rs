use thiserror::Error;

/// Errors raised by the numerical kernels, fitters and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("estimate diverged: {0}")]
    Divergence(String),
    #[error("frailty variance estimate is on the boundary (theta = 0); the operating point is at or beyond the critical zeta")]
    Boundary,
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
