use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimensions must be at least 1 (got {height}x{width}, count {count})")]
    ZeroDimension {
        height: usize,
        width: usize,
        count: usize,
    },
    #[error("data length {len} does not match {height}x{width}")]
    DataLength {
        height: usize,
        width: usize,
        len: usize,
    },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("image is constant; correlation is undefined")]
    ConstantImage,
    #[error("length mismatch: {expected} patterns but {actual} buckets")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("group frame is inconsistent: plane {plane} deviates from bucket x pattern by {deviation:e}")]
    CorruptGf { plane: usize, deviation: f64 },
    #[error("bad checkpoints: {0}")]
    BadCheckpoints(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid batch group frame: {0}")]
    InvalidBgf(String),
    #[error("base frame {batch}:{frame} does not exist")]
    BadBase { batch: usize, frame: usize },
    #[error("invalid angle grid: {0}")]
    InvalidGrid(String),
    #[error("image {height}x{width} is smaller than the {window}x{window} window")]
    TooSmall {
        height: usize,
        width: usize,
        window: usize,
    },
    #[error("bucket {index} is zero; pattern cannot be recovered from its plane")]
    ZeroBucket { index: usize },
    #[error("not a GFB1 container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    VersionUnsupported(u16),
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}
