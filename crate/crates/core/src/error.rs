use std::path::PathBuf;

/// Errors produced by the geometry, model and verification layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("model consistency violated: {0}")]
    ModelConsistency(String),

    #[error("chart mismatch: collar lengths {0} and {1} differ")]
    ChartMismatch(f64, f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ChartMismatch(..) | Error::Serde(_) => 2,
            Error::Io { .. } => 2,
            Error::Domain(_)
            | Error::Quadrature(_)
            | Error::Singular(_)
            | Error::ModelConsistency(_) => 3,
        }
    }
}
