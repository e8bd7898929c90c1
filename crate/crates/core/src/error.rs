use thiserror::Error;

/// Errors surfaced by the library. Dimension problems are hard errors that
/// name the offending shapes so a mismatch is diagnosable from the message
/// alone.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument for {op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("weight file error: {0}")]
    WeightFile(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("training aborted at iteration {iteration}: {msg}")]
    Training { iteration: usize, msg: String },

    #[error("ensemble error: {0}")]
    Ensemble(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub fn invalid(op: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            detail: detail.into(),
        }
    }
}
