use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {doc_id:?} at {path}:{line}")]
    DuplicateDocId {
        path: PathBuf,
        line: usize,
        doc_id: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("graph is sealed; mutation rejected")]
    Sealed,

    #[error("graph is empty")]
    EmptyGraph,

    #[error("index file error: {0}")]
    IndexFormat(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
