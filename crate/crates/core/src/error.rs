use thiserror::Error;

/// Errors raised while building or reading site networks and states.
#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("{0}")]
    Invalid(String),
    #[error("malformed model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ValidationError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }
}

/// Failures of the numerical kernels.
#[derive(Debug, Error)]
pub enum NumericalError {
    #[error("eigensolver did not converge (residual {residual:e})")]
    EigenNoConvergence { residual: f64 },
    #[error("time step {dt} ps exceeds the stability limit; use dt <= {max_dt} ps")]
    StepTooLarge { dt: f64, max_dt: f64 },
    #[error("{0}")]
    Domain(String),
}

/// Top-level error for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
