use thiserror::Error;

/// Errors produced by model validation and the numeric evaluators.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration parameter violates its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Evaluation outside an operation's domain (t <= 0, support bounds, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested (family, delay, path) combination has no evaluator.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// A series failed to reach its tolerance within the term budget.
    #[error("series did not converge: {context} ({terms} terms, residual bound {residual:e})")]
    NoConvergence {
        context: &'static str,
        terms: usize,
        residual: f64,
    },

    /// Adaptive quadrature stalled above the requested tolerance. The best
    /// value and its error estimate are reported so callers can decide.
    #[error("quadrature tolerance not met: value {value} with error estimate {estimate:e}")]
    ToleranceNotMet { value: f64, estimate: f64 },

    /// The Lundberg adjustment coefficient does not exist.
    #[error("no positive root: {0}")]
    NoRoot(String),

    /// Two grids cannot be combined (spacing or origin mismatch).
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
