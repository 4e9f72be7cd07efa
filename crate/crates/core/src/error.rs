//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FdcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("missing weight tensor `{0}`")]
    MissingWeight(String),
    #[error("weight tensor `{name}` has shape {got:?}, expected {want:?}")]
    WeightShape {
        name: String,
        got: Vec<usize>,
        want: Vec<usize>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("checksum mismatch ({0})")]
    Checksum(String),
    #[error("unsupported version {0}")]
    Version(u16),
    #[error("corrupted stream: {0}")]
    CorruptStream(String),
    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FdcError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        FdcError::InvalidArgument(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        FdcError::DimensionMismatch(msg.into())
    }
}
