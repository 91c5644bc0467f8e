use std::path::PathBuf;

/// Failures of file formats and the study pipeline.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("{path}: not a RIFF/WAVE file: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}: unsupported encoding: {reason}")]
    UnsupportedEncoding { path: PathBuf, reason: String },
    #[error("{path}: no samples")]
    EmptyAudio { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Analysis {
        path: PathBuf,
        #[source]
        source: entrain_core::Error,
    },
    #[error(transparent)]
    Core(#[from] entrain_core::Error),
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn parse_err(path: &std::path::Path, reason: impl ToString) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}
