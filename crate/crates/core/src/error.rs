use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A marker or coding mode outside baseline sequential Huffman JPEG.
    #[error("unsupported JPEG feature: {0}")]
    UnsupportedMarker(String),
    #[error("malformed JPEG bitstream: {0}")]
    MalformedBitstream(String),
    #[error("unsupported chroma subsampling: {0}")]
    UnsupportedSubsampling(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("crop of {size} blocks does not fit a {rows}x{cols} block plane")]
    CropTooLarge { size: usize, rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image too small: {0}")]
    TooSmall(String),
    #[error("image has no chroma planes")]
    MissingChroma,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedBitstream(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
