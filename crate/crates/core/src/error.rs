use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-subset: operation requires at least one stroke")]
    EmptySubset,

    #[error("ink parse error at line {line}, column {column}: {message}")]
    InkParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("grammar error on line {line}: {message}")]
    Grammar { line: usize, message: String },

    #[error("untrained-symbols: the template library is empty")]
    UntrainedSymbols,

    #[error("untrained-relations: no class pair has training data")]
    UntrainedRelations,

    #[error("complexity-limit: parse table exceeded {cap} entries")]
    ComplexityLimit { cap: usize },

    #[error("input has {0} strokes; at most 64 are supported")]
    TooManyStrokes(usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("model error: {0}")]
    Model(String),

    #[error("unknown session {0}")]
    UnknownSession(u64),

    #[error("unknown model {0}")]
    UnknownModel(String),

    #[error("unknown stroke id {0}")]
    UnknownStroke(u64),

    #[error("no-interpretation: the selected strokes have no parse")]
    NoInterpretation,

    #[error("stale-alternates: list was served at revision {served}, session is at {current}")]
    StaleAlternates { served: u64, current: u64 },

    #[error("choice {index} is outside the served list of {len}")]
    BadChoice { index: usize, len: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptySubset => "empty-subset",
            Error::InkParse { .. } => "ink-parse",
            Error::Grammar { .. } => "grammar",
            Error::UntrainedSymbols => "untrained-symbols",
            Error::UntrainedRelations => "untrained-relations",
            Error::ComplexityLimit { .. } => "complexity-limit",
            Error::TooManyStrokes(_) => "too-many-strokes",
            Error::EmptyCorpus => "empty-corpus",
            Error::Model(_) => "model",
            Error::UnknownSession(_) => "unknown-session",
            Error::UnknownModel(_) => "unknown-model",
            Error::UnknownStroke(_) => "unknown-stroke",
            Error::NoInterpretation => "no-interpretation",
            Error::StaleAlternates { .. } => "stale-alternates",
            Error::BadChoice { .. } => "bad-choice",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
