use std::path::PathBuf;

use thiserror::Error;

use crate::signal::LeadId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input too short: {len} samples, at least {min} required")]
    TooShort { len: usize, min: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("backward called before forward on {0}")]
    NoForward(&'static str),

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("checksum mismatch for {0}")]
    Checksum(PathBuf),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("version skew in {path}: found version {found}, expected {expected}")]
    VersionSkew {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("incomplete lead coverage for patient {patient}, beat {beat}: missing {missing:?}")]
    IncompleteBeat {
        patient: String,
        beat: usize,
        missing: Vec<LeadId>,
    },

    #[error("R-R interval of {interval} samples exceeds target length {target_len}")]
    IntervalTooLong { interval: usize, target_len: usize },

    #[error("missing model: {0}")]
    MissingModel(String),

    #[error("training diverged for {model} at epoch {epoch}; last good checkpoint: {last_good:?}")]
    Diverged {
        model: String,
        epoch: usize,
        last_good: Option<PathBuf>,
    },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("output directory {0} is not empty (pass --force to replace it)")]
    OutputExists(PathBuf),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
