use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate potential landscape: found {found} wells, expected 4")]
    DegenerateLandscape { found: usize },

    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:.3e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("labeling failed: {0}")]
    Labeling(String),

    #[error("numerical failure: {message}\n{dump}")]
    Numerical { message: String, dump: String },

    #[error("integrator instability: norm drifted by {drift:.3e} at tau = {tau}")]
    IntegratorInstability { drift: f64, tau: f64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("unknown state label {0:?}")]
    UnknownLabel(String),

    #[error("config schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for malformed input, 1 for I/O, 3 for
    /// everything the physics or numerics reject.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
