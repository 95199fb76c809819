//! Block-domain image model.
//!
//! Coefficient `(u, v)` of an 8x8 block, with `u` the vertical and `v` the
//! horizontal frequency, lives at index `8 * u + v`. The same index is the
//! channel index once a plane is flattened into a [`FreqTensor`].

use crate::error::{Error, Result};

pub const BLOCK_LEN: usize = 64;

/// One 8x8 block, row-major.
pub type Block = [f64; BLOCK_LEN];

/// A grid of 8x8 coefficient blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DctPlane {
    rows: usize,
    cols: usize,
    blocks: Vec<Block>,
}

impl DctPlane {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_blocks(rows, cols, vec![[0.0; BLOCK_LEN]; rows * cols])
    }

    pub fn from_blocks(rows: usize, cols: usize, blocks: Vec<Block>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "block plane must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if blocks.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for a {rows}x{cols} grid",
                blocks.len()
            )));
        }
        Ok(DctPlane { rows, cols, blocks })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn block(&self, row: usize, col: usize) -> &Block {
        &self.blocks[row * self.cols + col]
    }

    pub fn block_mut(&mut self, row: usize, col: usize) -> &mut Block {
        &mut self.blocks[row * self.cols + col]
    }

    /// Elementwise map over every coefficient.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DctPlane {
        let blocks = self
            .blocks
            .iter()
            .map(|b| std::array::from_fn(|k| f(b[k])))
            .collect();
        DctPlane { rows: self.rows, cols: self.cols, blocks }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Subsampling {
    #[serde(rename = "4:4:4")]
    S444,
    #[serde(rename = "4:2:0")]
    S420,
}

impl Subsampling {
    /// Ratio between the luma and chroma sampling grids along each axis.
    pub fn chroma_factor(self) -> usize {
        match self {
            Subsampling::S444 => 1,
            Subsampling::S420 => 2,
        }
    }
}

impl std::fmt::Display for Subsampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Subsampling::S444 => "4:4:4",
            Subsampling::S420 => "4:2:0",
        })
    }
}

impl std::str::FromStr for Subsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4:4:4" | "444" => Ok(Subsampling::S444),
            "4:2:0" | "420" => Ok(Subsampling::S420),
            other => Err(Error::UnsupportedSubsampling(other.to_string())),
        }
    }
}

/// Chroma planes of a colour image.
#[derive(Debug, Clone, PartialEq)]
pub struct Chroma {
    pub cb: DctPlane,
    pub cr: DctPlane,
}

/// Per-component coefficient grids of a decoded JPEG.
///
/// Grids keep their MCU-padded extent; `width`/`height` are the true pixel
/// dimensions and padding is trimmed only when reconstructing pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DctImage {
    pub y: DctPlane,
    pub chroma: Option<Chroma>,
    pub width: usize,
    pub height: usize,
    pub subsampling: Subsampling,
}

impl DctImage {
    pub fn new(
        y: DctPlane,
        chroma: Option<Chroma>,
        width: usize,
        height: usize,
        subsampling: Subsampling,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        if y.rows * 8 < height || y.cols * 8 < width {
            return Err(Error::ShapeMismatch(format!(
                "luma grid {}x{} does not cover {width}x{height}",
                y.rows, y.cols
            )));
        }
        if let Some(c) = &chroma {
            if c.cb.rows != c.cr.rows || c.cb.cols != c.cr.cols {
                return Err(Error::ShapeMismatch("cb and cr grids differ".into()));
            }
            let span = 8 * subsampling.chroma_factor();
            if c.cb.rows * span < height || c.cb.cols * span < width {
                return Err(Error::ShapeMismatch(format!(
                    "chroma grid {}x{} does not cover {width}x{height} at {subsampling}",
                    c.cb.rows, c.cb.cols
                )));
            }
        }
        Ok(DctImage { y, chroma, width, height, subsampling })
    }

    pub fn chroma(&self) -> Result<&Chroma> {
        self.chroma.as_ref().ok_or(Error::MissingChroma)
    }
}

/// Declared value range of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

/// `rows x cols x 64` tensor of flattened blocks, channel-last.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqTensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    range: ValueRange,
}

impl FreqTensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, range: ValueRange) -> Result<Self> {
        if data.len() != rows * cols * BLOCK_LEN {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols}x64 tensor",
                data.len()
            )));
        }
        Ok(FreqTensor { rows, cols, data, range })
    }

    /// Builds a tensor and declares its observed min/max as its range.
    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let range = observed(&data);
        Self::new(rows, cols, data, range)
    }

    /// `(rows, cols, 64)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, BLOCK_LEN)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn value_range(&self) -> ValueRange {
        self.range
    }

    pub fn with_range(mut self, range: ValueRange) -> Self {
        self.range = range;
        self
    }

    /// Min/max actually present in the data.
    pub fn observed_range(&self) -> ValueRange {
        observed(&self.data)
    }

    pub fn at(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.cols + col) * BLOCK_LEN + channel]
    }
}

fn observed(data: &[f64]) -> ValueRange {
    let (min, max) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    ValueRange { min, max }
}

/// Flattens each block into a 64-channel vector, channel `k = 8u + v`.
pub fn blockify(plane: &DctPlane) -> FreqTensor {
    let data: Vec<f64> = plane.blocks.iter().flat_map(|b| b.iter().copied()).collect();
    FreqTensor::from_data(plane.rows, plane.cols, data).expect("block count matches grid")
}

pub fn unblockify(t: &FreqTensor) -> DctPlane {
    let blocks = t
        .data
        .chunks_exact(BLOCK_LEN)
        .map(|c| c.try_into().expect("chunk of 64"))
        .collect();
    DctPlane { rows: t.rows, cols: t.cols, blocks }
}

/// Affine map parameters between raw coefficients and network values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormParams {
    pub orig_min: f64,
    pub orig_max: f64,
    pub val_min: f64,
    pub val_max: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams { orig_min: -1024.0, orig_max: 1016.0, val_min: -1.0, val_max: 1.0 }
    }
}

impl NormParams {
    pub fn new(orig_min: f64, orig_max: f64, val_min: f64, val_max: f64) -> Result<Self> {
        if orig_max.partial_cmp(&orig_min) != Some(std::cmp::Ordering::Greater)
            || val_max.partial_cmp(&val_min) != Some(std::cmp::Ordering::Greater)
        {
            return Err(Error::InvalidArgument(format!(
                "normalization ranges must be increasing: [{orig_min}, {orig_max}] -> [{val_min}, {val_max}]"
            )));
        }
        Ok(NormParams { orig_min, orig_max, val_min, val_max })
    }

    pub fn normalize_value(&self, x: f64) -> f64 {
        self.val_min
            + ((x - self.orig_min) / (self.orig_max - self.orig_min)) * (self.val_max - self.val_min)
    }

    pub fn denormalize_value(&self, y: f64) -> f64 {
        self.orig_min
            + ((y - self.val_min) / (self.val_max - self.val_min)) * (self.orig_max - self.orig_min)
    }
}

/// Interleaved 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Single-channel real raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {width}x{height} plane",
                data.len()
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, v: f64) -> Result<Self> {
        Self::new(width, height, vec![v; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Top-left `width x height` window.
    pub fn trimmed(&self, width: usize, height: usize) -> Result<Plane> {
        if width > self.width || height > self.height {
            return Err(Error::DimensionMismatch(format!(
                "cannot trim {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        Plane::from_fn(width, height, |x, y| self.at(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn channel_index_is_row_major() {
        let mut plane = DctPlane::zeros(1, 1).unwrap();
        plane.block_mut(0, 0)[8 + 2] = 5.0;
        let t = blockify(&plane);
        let nonzero: Vec<usize> = (0..64).filter(|&k| t.at(0, 0, k) != 0.0).collect();
        assert_eq!(nonzero, vec![10]);
    }

    #[test]
    fn dc_is_channel_zero() {
        let mut plane = DctPlane::zeros(2, 3).unwrap();
        plane.block_mut(1, 2)[0] = -7.0;
        let t = blockify(&plane);
        assert_eq!(t.at(1, 2, 0), -7.0);
        assert_eq!(t.dims(), (2, 3, 64));
    }

    #[test]
    fn shapes_follow_image_dims() {
        // 160x160 at 4:2:0: luma 20x20 blocks, chroma 10x10.
        let y = DctPlane::zeros(20, 20).unwrap();
        let c = DctPlane::zeros(10, 10).unwrap();
        assert_eq!(blockify(&y).dims(), (20, 20, 64));
        assert_eq!(blockify(&c).dims(), (10, 10, 64));
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(matches!(DctPlane::zeros(0, 3), Err(Error::InvalidDimensions(_))));
    }

    #[test]
    fn image_validates_grid_coverage() {
        let y = DctPlane::zeros(2, 2).unwrap();
        assert!(DctImage::new(y.clone(), None, 16, 16, Subsampling::S444).is_ok());
        assert!(DctImage::new(y, None, 17, 16, Subsampling::S444).is_err());
    }

    #[test]
    fn norm_endpoints() {
        let p = NormParams::default();
        assert_eq!(p.normalize_value(-1024.0), -1.0);
        assert_eq!(p.normalize_value(1016.0), 1.0);
        assert_eq!(p.normalize_value(-4.0), 0.0);
        assert!(NormParams::new(1.0, 1.0, -1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn blockify_roundtrip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let blocks = (0..rows * cols)
                .map(|_| std::array::from_fn(|_| rng.gen_range(-1024.0..1016.0)))
                .collect();
            let plane = DctPlane::from_blocks(rows, cols, blocks).unwrap();
            prop_assert_eq!(unblockify(&blockify(&plane)), plane);
        }
    }
}
