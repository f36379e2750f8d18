use std::io;

use thiserror::Error;

/// Errors produced by the halftoning engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("gray level {0} outside [0, 1]")]
    OutOfRangeGray(f64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    #[error("image {width}x{height} smaller than window {window}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("malformed kernel table: {0}")]
    MalformedTable(String),
    #[error("kernel table row for level {level} sums to {sum}, expected 1")]
    WeightsDontNormalize { level: usize, sum: f64 },
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error("malformed config: {0}")]
    MalformedConfig(String),
    #[error("malformed mask file: {0}")]
    MalformedMask(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(lw: usize, lh: usize, rw: usize, rh: usize) -> Result<()> {
    if lw != rw || lh != rh {
        return Err(Error::DimensionMismatch {
            left_w: lw,
            left_h: lh,
            right_w: rw,
            right_h: rh,
        });
    }
    Ok(())
}
