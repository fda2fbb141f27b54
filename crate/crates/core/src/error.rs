use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a structural requirement (non-positive weight, bad table, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Input does not integrate to zero where a vanishing mean is required.
    #[error("input has nonzero mean {mean:e} (allowed {allowed:e})")]
    NonzeroMean { mean: f64, allowed: f64 },

    /// Input carries mass outside the subdomains covered by the decomposition.
    #[error("input carries mass {mass:e} outside the first {n_sub} subdomains")]
    TailMass { mass: f64, n_sub: usize },

    /// A precondition other than the ones above failed.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An iterative solve did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// Two objects that must live on the same grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The requested quantity is undefined for this input (e.g. division by a zero norm).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
