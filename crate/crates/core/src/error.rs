//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed scene/image file; `offset` is the byte position of the
    /// first offending datum.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    /// A domain invariant failed on loaded or constructed data.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    /// Non-finite gradient; `param` names the offending parameter group.
    #[error("non-finite gradient in parameter '{param}' (gaussian {index})")]
    NanGradient { param: String, index: usize },

    /// Training divergence guard tripped.
    #[error("training diverged: L_rgb stayed above {threshold:.3e} for {window} iterations (iteration {iter})")]
    Diverged {
        threshold: f64,
        window: usize,
        iter: usize,
    },

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}
