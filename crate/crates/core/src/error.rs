use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input could not be decoded, or a required field is absent or mistyped.
    #[error("malformed input in {source_name} at {location}: {message}")]
    MalformedInput {
        source_name: String,
        location: String,
        message: String,
    },

    /// Input decoded, but violates a structural invariant (dangling index, duplicate id, ...).
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("example {example_id} references unknown database `{db_id}`")]
    UnknownDatabase { example_id: String, db_id: String },

    #[error("i/o failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("judge unavailable for {subject} after {attempts} attempt(s): {message}")]
    JudgeUnavailable {
        subject: String,
        attempts: u32,
        message: String,
    },

    #[error("no relevance judgment for `{0}`")]
    MissingJudgment(String),

    #[error("no human head noun found in example {0}")]
    NoHumanHeadNoun(String),

    #[error("unparseable SQL at offset {offset}: {message}")]
    Unparseable { offset: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("length mismatch: {predictions} predictions for {examples} examples")]
    LengthMismatch { predictions: usize, examples: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        source_name: impl Into<String>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::MalformedInput {
            source_name: source_name.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error: 1 data/validation, 2 configuration,
    /// 3 external service.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::JudgeUnavailable { .. } => 3,
            _ => 1,
        }
    }
}
