use crate::blocks::FreqTensor;
use crate::error::{Error, Result};

/// Dense n-dimensional array, row-major. Used for weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Array { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Array { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// A single-image activation tensor with dims `(1, channels, height, width)`,
/// stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor4 { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "(1, {channels}, {height}, {width}) needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Tensor4 { channels, height, width, data })
    }

    pub fn from_fn(channels: usize, height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Tensor4 { channels, height, width, data }
    }

    /// Reorders a `(rows, cols, 64)` frequency tensor into `(1, 64, rows, cols)`.
    pub fn from_freq(t: &FreqTensor) -> Self {
        let (rows, cols, ch) = t.dims();
        let src = t.data();
        let mut data = vec![0.0; src.len()];
        for (p, px) in src.chunks_exact(ch).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * rows * cols + p] = v;
            }
        }
        Tensor4 { channels: ch, height: rows, width: cols, data }
    }

    /// Inverse of [`Tensor4::from_freq`]. Requires 64 channels.
    pub fn to_freq(&self) -> Result<FreqTensor> {
        if self.channels != crate::blocks::BLOCK_LEN {
            return Err(Error::ShapeMismatch(format!(
                "frequency tensors have 64 channels, got {}",
                self.channels
            )));
        }
        let hw = self.height * self.width;
        let mut data = vec![0.0; self.data.len()];
        for (c, plane) in self.data.chunks_exact(hw.max(1)).enumerate() {
            for (p, &v) in plane.iter().enumerate() {
                data[p * self.channels + c] = v;
            }
        }
        FreqTensor::from_data(self.height, self.width, data)
    }

    /// `(batch, channels, height, width)`; batch is always 1.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (1, self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.data[c * hw..(c + 1) * hw]
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub(crate) fn same_dims(&self, other: &Tensor4) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_same(&self, other: &Tensor4, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("{what}: {:?} vs {:?}", self.dims(), other.dims())))
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor4) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}
