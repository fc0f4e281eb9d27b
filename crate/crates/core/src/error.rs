use std::io;

use thiserror::Error;

/// Errors produced anywhere in the gesture pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("lost track: {0}")]
    LostTrack(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate fusion: element-wise product of the probability vectors is zero")]
    DegenerateFusion,

    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
