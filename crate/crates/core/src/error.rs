use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulator.
///
/// Every variant maps onto one of the process exit classes used by the
/// scenario runner (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("frequency band error: {0}")]
    Band(String),

    #[error("singular configuration: {0}")]
    SingularConfig(String),

    #[error("numerical failure: {message}")]
    Numerical { message: String, diagnostics: String },

    #[error("step-size underflow at t = {t}: step {step:e} (norm drift {norm_drift:e})")]
    Stiffness { t: f64, step: f64, norm_drift: f64 },

    #[error("truncation error: norm loss {norm_loss:e} exceeds {limit:e}; raise n_max")]
    Truncation { norm_loss: f64, limit: f64 },

    #[error("capacity exceeded: dimension {dimension} above limit {limit}")]
    Capacity { dimension: usize, limit: usize },

    #[error("poor fit: {0}")]
    FitQuality(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            diagnostics: diagnostics.into(),
        }
    }

    /// Exit status: 2 for configuration/schema problems, 3 for numerical
    /// failures, 4 for capacity, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::GeometryMismatch(_)
            | Error::Domain(_)
            | Error::Band(_)
            | Error::SingularConfig(_)
            | Error::Schema(_)
            | Error::Json(_) => 2,
            Error::Numerical { .. } | Error::Stiffness { .. } | Error::Truncation { .. } | Error::FitQuality(_) => 3,
            Error::Capacity { .. } => 4,
            Error::Io(_) => 1,
        }
    }

    /// Machine-readable error class written to stderr by the runner.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid-config",
            Error::GeometryMismatch(_) => "geometry-mismatch",
            Error::Domain(_) => "domain",
            Error::Band(_) => "band",
            Error::SingularConfig(_) => "singular-config",
            Error::Numerical { .. } => "numerical",
            Error::Stiffness { .. } => "stiffness",
            Error::Truncation { .. } => "truncation",
            Error::Capacity { .. } => "capacity",
            Error::FitQuality(_) => "fit-quality",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "schema",
        }
    }
}
