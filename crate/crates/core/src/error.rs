use thiserror::Error;

use crate::identify::IdentificationResult;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:.3e})")]
    Divergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("no disk reproduces the data (relative misfit {relative_residual:.3e})")]
    NoDiskFound {
        relative_residual: f64,
        candidate: Box<IdentificationResult>,
    },

    #[error("degenerate inclusion: {0}")]
    Degenerate(String),

    #[error("optimization failed: {reason}")]
    OptimizationFailure { reason: String, trace: Vec<f64> },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
