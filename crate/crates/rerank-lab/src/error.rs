//! Error types shared across the crate.

use std::path::PathBuf;

/// Errors produced by loaders, validators, and the numeric operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed input line, reported with its 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate doc_id {0:?} in corpus")]
    DuplicateDocId(String),

    #[error("duplicate query_id {0:?} in query set")]
    DuplicateQueryId(String),

    #[error("duplicate judgment for query {query_id:?}, doc {doc_id:?}")]
    DuplicateJudgment { query_id: String, doc_id: String },

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("run is empty")]
    EmptyRun,

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Transport-level failures from a ranker backend, surfaced after retries.
#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("http status {status}: {body}")]
    Status { status: u16, body: String },

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("malformed completion response: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
