use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Fatal errors. Row-level problems in input files are not errors; they are
/// reported as [`crate::ingest::Diagnostic`]s.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("ingest: schema error: {0}")]
    Schema(String),
    #[error("config: {0}")]
    Config(String),
    #[error("taxonomy: {0}")]
    Taxonomy(String),
    #[error("svm: dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("svm: degenerate label set: {0}")]
    DegenerateLabels(String),
    #[error("svm: {0}")]
    Svm(String),
    #[error("model_selection: {0}")]
    Selection(String),
    #[error("evaluation: {0}")]
    Evaluation(String),
    #[error("synth: {0}")]
    Synth(String),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by invalid configuration rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
