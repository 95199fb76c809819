//! Baseline JPEG: decoding to DCT coefficients or pixels, and encoding.

mod bits;
mod decoder;
mod encoder;
pub mod huffman;
pub mod tables;

pub use decoder::{decode_to_dct, decode_to_rgb, read_frame_info, Component, FrameInfo, QuantTable};
pub use encoder::encode_baseline;
pub use huffman::{HuffmanTable, TableClass};
