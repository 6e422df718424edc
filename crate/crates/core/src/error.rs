use thiserror::Error;

/// Errors raised by the discretization, the solvers and the scenario harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("negative state value {value:e} at node {node}; positivity was lost upstream")]
    NegativeState { node: usize, value: f64 },

    #[error(
        "nonlinear iteration did not converge at step {step} after {iterations} iterations \
         (last update {last_update:e}); try a smaller time step"
    )]
    NonlinearNotConverged {
        step: usize,
        iterations: usize,
        last_update: f64,
    },

    #[error(
        "nonlinear iteration diverging at step {step}: update grew for {streak} consecutive sweeps"
    )]
    NonlinearDiverging { step: usize, streak: usize },

    #[error(
        "linear solver stagnated after {iterations} iterations (relative residual {residual:e})"
    )]
    LinearSolverStagnation { iterations: usize, residual: f64 },

    #[error("linear system is not positive definite")]
    NotPositiveDefinite,

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
