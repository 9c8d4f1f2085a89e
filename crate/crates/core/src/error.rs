use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants are grouped by how a caller is expected to react; see
/// [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numeric accuracy not reached: {what} (error estimate {estimate:.3e})")]
    Accuracy { what: String, estimate: f64 },

    #[error("fit did not converge after {iterations} iterations: {reason}")]
    FitFailure {
        reason: String,
        iterations: usize,
        /// Best parameter vector seen before giving up.
        best: Vec<f64>,
        best_cost: f64,
    },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    DataQuality,
    Numeric,
    Other,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Domain(_) => ErrorKind::Config,
            Error::DataQuality(_) | Error::Input(_) | Error::Analysis(_) => ErrorKind::DataQuality,
            Error::Accuracy { .. }
            | Error::FitFailure { .. }
            | Error::Numeric(_)
            | Error::Resource(_) => ErrorKind::Numeric,
            Error::Io { .. } => ErrorKind::Other,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
