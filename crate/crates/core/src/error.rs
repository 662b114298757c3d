use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate discretization: {0}")]
    DegenerateDiscretization(String),

    #[error("empty point set: {0}")]
    EmptySet(&'static str),

    /// Symmetric factorization broke down; `pivot` is the smallest pivot seen.
    #[error("factorization failed at row {index}: smallest pivot {pivot:e}")]
    Factorization { index: usize, pivot: f64 },

    #[error("f not strictly positive: f({x}, {y}) = {value}")]
    NonPositiveSource { x: f64, y: f64, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solver stalled: {0}")]
    SolverStalled(String),
}
