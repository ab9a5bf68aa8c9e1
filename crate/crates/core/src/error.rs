use thiserror::Error;

/// Errors produced by the HBVM library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HbvmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The stage fixed-point iteration hit its iteration cap.
    #[error("stage iteration did not converge at t = {t}: residual {residual:e} after {iterations} iterations")]
    StepFailure {
        t: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite vector field value at t = {t}")]
    NonFinite { t: f64 },

    #[error("convergence order undefined for errors ({0:e}, {1:e})")]
    UndefinedOrder(f64, f64),

    #[error("trajectories end at different times ({0} vs {1})")]
    HorizonMismatch(f64, f64),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, HbvmError>;
