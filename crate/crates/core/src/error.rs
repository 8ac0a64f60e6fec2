use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected N = {expected}, got N = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation at a point where the quantity is singular or undefined.
    #[error("domain error: {0}")]
    Domain(String),

    /// `c` exceeds the critical constant `N^2`; no real smallest root exists.
    #[error("supercritical coefficient c = {c} > C*(N) = {cstar}")]
    Supercritical { c: f64, cstar: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("scheme is not monotone: {0}")]
    Monotonicity(String),

    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e})")]
    SolveFailed { iterations: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
