use thiserror::Error;

/// Errors raised by the solvers, the data generator and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error(
        "coordinate descent did not converge at lambda={lambda:e} after {sweeps} sweeps \
         (kkt residual {kkt_residual:e})"
    )]
    NonConvergence {
        lambda: f64,
        sweeps: usize,
        kkt_residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("path point {index}: {source}")]
    PathPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{dropped} of {total} Monte Carlo repetitions failed")]
    TooManyFailures { dropped: usize, total: usize },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("csv schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
