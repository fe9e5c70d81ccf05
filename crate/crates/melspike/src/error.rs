//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A WAV file violated the RIFF/PCM contract. `field` names the
    /// offending header field.
    #[error("invalid wav: field `{field}`: {detail}")]
    InvalidWav { field: &'static str, detail: String },

    #[error("utterance `{id}` too short: {samples} samples, need at least {min}")]
    TooShort {
        id: String,
        samples: usize,
        min: usize,
    },

    #[error("invalid utterance: {0}")]
    InvalidUtterance(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("ingest: {0}")]
    Ingest(String),

    #[error("parse error in {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("hmm: {0}")]
    Hmm(String),

    /// Wraps an error with the pipeline stage it occurred in.
    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tag an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) fn dim_mismatch(
    context: &'static str,
    expected: impl ToString,
    actual: impl ToString,
) -> Error {
    Error::DimensionMismatch {
        context,
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
