use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Ingest { line: usize, message: String },

    #[error("line {line}: duplicate reference id {id:?}")]
    DuplicateId { id: String, line: usize },

    #[error("no candidates mention {drug:?}")]
    NoCandidates { drug: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("illegal action: {to:?} is not a neighbor of {from:?}")]
    IllegalAction { from: String, to: String },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("training failed at step {step}: {message}")]
    Training { step: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn open(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create(path: &std::path::Path) -> Result<std::fs::File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::File {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    std::fs::File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}
