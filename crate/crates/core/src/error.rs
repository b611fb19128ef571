use thiserror::Error;

/// Errors raised by grid construction, assembly, solves and fits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("fit window has {found} nodes, at least {required} required")]
    WindowTooSmall { found: usize, required: usize },

    #[error("non-positive value {value:e} at node {index} inside the fit window")]
    NonPositive { index: usize, value: f64 },

    #[error("unresolved boundary layer: {0}")]
    UnresolvedBoundaryLayer(String),

    #[error("singular point: x = y = {0}")]
    SingularPoint(f64),

    #[error("empty strip: no nodes with delta < {0}")]
    EmptyStrip(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
