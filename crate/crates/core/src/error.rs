use thiserror::Error;

/// Errors raised by the solvers and the scenario loader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solution blew up (non-finite state) at t = {t}")]
    BlowUp { t: f64 },

    #[error("step size underflow at t = {t} (last valid time)")]
    StepUnderflow { t: f64 },

    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time {t} lies outside the trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than solver failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
