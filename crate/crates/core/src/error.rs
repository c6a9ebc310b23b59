use thiserror::Error;

/// Errors raised by channel construction, rate evaluation and optimization.
#[derive(Debug, Error)]
pub enum RsmaError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("invalid decoding or encoding order: {0}")]
    InvalidOrder(String),
    #[error("invalid stream layout: {0}")]
    Layout(String),
    #[error("unsupported layout for this operation: {0}")]
    UnsupportedLayout(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RsmaError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(RsmaError::Parameter(msg.into()))
}

pub(crate) fn dim<T>(msg: impl Into<String>) -> Result<T> {
    Err(RsmaError::Dimension(msg.into()))
}
