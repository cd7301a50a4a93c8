use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Parse { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: unexpected schema header ({found})")]
    Schema { path: PathBuf, found: String },
    #[error("record encoding failed: {0}")]
    Encode(String),
    #[error("content hash mismatch: manifest {expected}, files {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("{record} references missing id {target}")]
    DanglingReference { record: String, target: String },
    #[error("invariant violated by {record}: {message}")]
    Invalid { record: String, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}
