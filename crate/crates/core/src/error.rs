use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("schema error in {location}: field `{field}`: {message}")]
    Schema {
        location: String,
        field: String,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("unknown slot `{slot}` in domain `{domain}`")]
    UnknownSlot { domain: String, slot: String },

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("turn index {index} out of range (dialog has {len} turns)")]
    TurnIndex { index: usize, len: usize },

    #[error("state already carries a ruk triple ({0})")]
    Conflict(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("invalid belief state: {0}")]
    InvalidState(String),

    #[error("no documents to index for {0}")]
    EmptyCorpus(String),

    #[error("document `{0}` has no indexable tokens")]
    NoTokens(String),

    #[error("unsupported format version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },

    #[error("{candidates} candidates but {references} references")]
    LengthMismatch {
        candidates: usize,
        references: usize,
    },

    #[error("missing prediction for dialog `{dialog_id}` turn {turn}")]
    MissingPrediction { dialog_id: String, turn: usize },

    #[error("duplicate prediction for dialog `{dialog_id}` turn {turn}")]
    DuplicatePrediction { dialog_id: String, turn: usize },

    #[error("document `{0}` appears more than once in a ranking")]
    DuplicateDoc(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Parse {
            context: context.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::DuplicateId(_) => "duplicate_id",
            Error::UnknownDomain(_) => "unknown_domain",
            Error::UnknownSlot { .. } => "unknown_slot",
            Error::UnknownDocument(_) => "unknown_document",
            Error::TurnIndex { .. } => "index",
            Error::Conflict(_) => "conflict",
            Error::Format { .. } => "format",
            Error::InvalidState(_) => "invalid_state",
            Error::EmptyCorpus(_) => "empty_corpus",
            Error::NoTokens(_) => "no_tokens",
            Error::Version { .. } => "version",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::MissingPrediction { .. } => "missing_prediction",
            Error::DuplicatePrediction { .. } => "duplicate_prediction",
            Error::DuplicateDoc(_) => "duplicate_doc",
            Error::Config(_) => "config",
        }
    }
}
