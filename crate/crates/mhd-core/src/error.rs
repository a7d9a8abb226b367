//! Error type shared by all solver stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MhdError {
    #[error("invalid field data: {0}")]
    InvalidField(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solver did not converge: residual {residual:.3e} after {iters} iterations")]
    SolverDiverged { residual: f64, iters: usize },

    #[error("density positivity violated: min value {0:.3e}")]
    NonpositiveDensity(f64),

    #[error("initial magnetic divergence {norm:.3e} exceeds tolerance {tol:.3e}")]
    DivergenceTooLarge { norm: f64, tol: f64 },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MhdError>;
