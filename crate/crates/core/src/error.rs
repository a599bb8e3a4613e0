use thiserror::Error;

/// Errors raised by tests, fitting, simulation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient sample: need at least {needed} observations, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("all differences are ties; nothing left to test")]
    AllTies,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("target mean {target} is outside the open support interval ({lo}, {hi})")]
    UnreachableMean { target: f64, lo: f64, hi: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("exact enumeration over {n} observations exceeds the limit of {max}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("insufficient systems: {0}")]
    InsufficientSystems(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end:
    /// 2 usage, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::EnumerationTooLarge { .. } => 2,
            Error::NumericFailure(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
