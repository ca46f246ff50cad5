use std::path::PathBuf;

/// Errors raised by the library. Validation results that are meant to be
/// inspected (timeline violations, negation accuracy, ...) are returned as
/// values instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown symptom `{0}`")]
    UnknownSymptom(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("label `{0}` has no examples")]
    EmptyLabel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model artifact: {0}")]
    Artifact(String),

    #[error("run (step {step}, seed {seed}, model {model}): {source}")]
    Run {
        step: usize,
        seed: usize,
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid_arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
