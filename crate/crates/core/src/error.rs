use crate::tensor::Dims;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: Dims, right: Dims },
    #[error("buffer of length {len} does not match dims {dims}")]
    BadLength { dims: Dims, len: usize },
    #[error("{what} extent is {extent}, need at least {min}")]
    TooSmall {
        what: &'static str,
        extent: usize,
        min: usize,
    },
    #[error("non-finite value at offset {0}")]
    NonFinite(usize),
    #[error("negative observation value {value} at offset {offset}")]
    NegativeObservation { offset: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(&'static str),
    #[error("angle {0}° outside (-90, 90)")]
    AngleOutOfRange(f64),
    #[error("empty angle sweep")]
    EmptySweep,
}
