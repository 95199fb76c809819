//! Compressed-domain super-resolution: a baseline JPEG codec that stops at
//! dequantized DCT coefficients, DCT-domain preprocessing, a small CNN engine
//! operating on 64-channel frequency tensors, and the spatial-domain math
//! needed to get back to pixels.

pub mod blocks;
pub mod error;
pub mod formats;
pub mod freq;
pub mod jpeg;
pub mod metrics;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
