use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed XML near session {session}: {message}")]
    Xml { session: String, message: String },

    #[error("session {session}: {message}")]
    Ingest { session: String, message: String },

    #[error("qrels line {line}: {message}")]
    Qrels { line: usize, message: String },

    #[error("corpus invariant violated: {0}")]
    Invariant(String),

    #[error("unsupported corpus schema version {found} (expected {expected})")]
    UnsupportedSchema { found: u64, expected: u64 },

    #[error("corpus decode failed: {0}")]
    Decode(String),

    #[error("{0:?} statistics need document text but no docstore is attached")]
    MissingDocstore(crate::similarity::SourceKind),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid generator spec: {field}: {message}")]
    Spec { field: String, message: String },

    #[error("generator spec outside the tractable regime: {0}")]
    Intractable(String),

    #[error("report: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn spec(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Spec {
            field: field.into(),
            message: message.into(),
        }
    }
}
