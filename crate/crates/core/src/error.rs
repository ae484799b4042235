use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular pairing matrix (|det| = {det:.3e})")]
    SingularPairing { det: f64 },

    #[error("matrix is not positive definite: leading {minor}x{minor} minor is {value:.3e}")]
    NotPositiveDefinite { minor: usize, value: f64 },

    #[error("metric is not compatible with the pairing (residual {residual:.3e})")]
    IncompatibleMetric { residual: f64 },

    #[error("expected {expected:?} frame ordering, got {got:?}")]
    WrongOrdering { expected: crate::algebra::Ordering, got: crate::algebra::Ordering },

    #[error("invalid grid parameter: {0}")]
    GridParam(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("metric lost positivity at node {node} (r={r:.4}, phi={phi:.4})")]
    PositivityLoss { node: usize, r: f64, phi: f64 },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64, trace: Vec<f64> },

    #[error("invalid configuration: {violations:?}")]
    InvalidConfig { violations: Vec<String> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
