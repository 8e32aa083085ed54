use thiserror::Error;

/// Failures raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("decay fit failed: {0}")]
    FitFailure(String),

    #[error("derivative estimate unstable under refinement: {0}")]
    Instability(String),

    #[error("adjacent Whitney intervals {left} and {right} differ in scale by more than 4")]
    IncompatibleScales { left: usize, right: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("eigensolver failure: {0}")]
    EigenFailure(String),

    #[error("count bound violated on interval {interval}: {detail}")]
    CountViolation { interval: usize, detail: String },

    #[error("pipeline assertion failed: {0}")]
    PipelineAssertion(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
