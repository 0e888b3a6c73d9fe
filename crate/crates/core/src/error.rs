use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", file.display())]
    Format {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cannot evaluate concept: {0}")]
    Evaluation(String),

    #[error("cannot parse formula at byte {pos}: {message}")]
    Parse { pos: usize, message: String },

    #[error("neuron {0} never activates on the dataset")]
    DeadNeuron(usize),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("cannot generate dataset: {0}")]
    Generation(String),

    #[error("search space of {size} formulas exceeds the cap of {cap}")]
    SearchSpace { size: u128, cap: u128 },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input (bad paths, malformed files, bad arguments).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format { .. }
                | Error::InvalidArgument(_)
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::MissingArtifact(_)
                | Error::Json(_)
        )
    }
}
