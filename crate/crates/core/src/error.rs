use thiserror::Error;

/// Errors raised by grids, solvers, oracles and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("alignment rule violated: payoff {h} is not a positive integer multiple of dx = {dx}")]
    Misaligned { h: f64, dx: f64 },

    #[error("time step {dt} exceeds the stability bound {max_dt}")]
    UnstableTimeStep { dt: f64, max_dt: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("lattice truncation too small: tail weight {tail:e} beyond j_max = {j_max} exceeds {tolerance:e}")]
    TruncationTooSmall { j_max: usize, tail: f64, tolerance: f64 },

    #[error("t_end = {t_end} is beyond the reachable horizon (max reachable time {max_time})")]
    UnreachableHorizon { t_end: f64, max_time: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvariantViolation(_) => 3,
            Error::NumericalInstability(_) | Error::UnstableTimeStep { .. } => 4,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
