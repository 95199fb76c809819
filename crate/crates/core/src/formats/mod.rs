//! File formats: the DCTT tensor container and RGB raster files.

pub mod dctt;
pub mod image;

pub use image::{read_image, write_image};
