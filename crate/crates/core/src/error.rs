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

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id \"{0}\"")]
    DuplicateDocId(String),

    #[error("empty collection")]
    EmptyCollection,

    #[error("empty universe")]
    EmptyUniverse,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown doc_id \"{0}\"")]
    UnknownDocId(String),

    #[error("doc_id \"{id}\" appears in both group \"{first}\" and group \"{second}\"")]
    OverlappingGroups {
        id: String,
        first: String,
        second: String,
    },

    #[error("corpus checksum mismatch: {left} vs {right}")]
    ChecksumMismatch { left: String, right: String },

    #[error("unsupported snapshot: {0}")]
    Snapshot(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True when the failure is a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
