//! DCTT tensor container.
//!
//! A record is: magic `DCTT`, version `u8`, dtype `u8` (0 = i32, 1 = f32,
//! 2 = f64), ndim `u8`, dims as `u32` little-endian, then the payload in
//! row-major little-endian order. A file holds one or more records back to
//! back; coefficient dumps store Y, Cb, Cr in that order.

use crate::blocks::{DctImage, DctPlane, FreqTensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DCTT";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn dtype(&self) -> u8 {
        match self {
            TensorData::I32(_) => 0,
            TensorData::F32(_) => 1,
            TensorData::F64(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::I32(v) => v.len(),
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::I32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub dims: Vec<usize>,
    pub data: TensorData,
}

impl Record {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        if dims.len() > u8::MAX as usize || dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::InvalidArgument(format!("dims {dims:?} do not fit the container")));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!("dims {dims:?} need {n} values, got {}", data.len())));
        }
        Ok(Record { dims, data })
    }

    /// Coefficient plane as `i32` with dims `(rows, cols, 8, 8)`.
    pub fn from_plane(plane: &DctPlane) -> Result<Self> {
        let mut v = Vec::with_capacity(plane.blocks().len() * 64);
        for &x in plane.blocks().iter().flatten() {
            if x.fract() != 0.0 || x.abs() > i32::MAX as f64 {
                return Err(Error::InvalidArgument(format!("coefficient {x} is not a 32-bit integer")));
            }
            v.push(x as i32);
        }
        Record::new(vec![plane.rows(), plane.cols(), 8, 8], TensorData::I32(v))
    }

    /// Frequency tensor as `f64` with dims `(rows, cols, 64)`.
    pub fn from_freq(t: &FreqTensor) -> Self {
        let (r, c, k) = t.dims();
        Record { dims: vec![r, c, k], data: TensorData::F64(t.data().to_vec()) }
    }

    /// Inverse of [`Record::from_plane`].
    pub fn to_plane(&self) -> Result<DctPlane> {
        if self.dims.len() != 4 || self.dims[2] != 8 || self.dims[3] != 8 {
            return Err(Error::format(format!("dims {:?} are not a coefficient plane", self.dims)));
        }
        let v = self.data.to_f64();
        let blocks = v.chunks_exact(64).map(|c| c.try_into().expect("64 values")).collect();
        DctPlane::from_blocks(self.dims[0], self.dims[1], blocks)
    }

    pub fn to_freq(&self) -> Result<FreqTensor> {
        if self.dims.len() != 3 || self.dims[2] != 64 {
            return Err(Error::format(format!("dims {:?} are not a frequency tensor", self.dims)));
        }
        FreqTensor::from_data(self.dims[0], self.dims[1], self.data.to_f64())
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.data.dtype());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match &self.data {
            TensorData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }
}

/// All planes of a coefficient image: Y, then Cb and Cr when present.
pub fn image_records(img: &DctImage) -> Result<Vec<Record>> {
    let mut out = vec![Record::from_plane(&img.y)?];
    if let Some(c) = &img.chroma {
        out.push(Record::from_plane(&c.cb)?);
        out.push(Record::from_plane(&c.cr)?);
    }
    Ok(out)
}

pub fn to_bytes(records: &[Record]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        r.write_to(&mut out);
    }
    out
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| Error::format("DCTT record is truncated"))?;
    let s = &bytes[*pos..end];
    *pos = end;
    Ok(s)
}

/// Parses every record in `bytes`; at least one is required.
pub fn from_bytes(bytes: &[u8]) -> Result<Vec<Record>> {
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < bytes.len() || out.is_empty() {
        if take(bytes, &mut pos, 4)? != MAGIC {
            return Err(Error::format("not a DCTT record"));
        }
        let head = take(bytes, &mut pos, 3)?;
        let (version, dtype, ndim) = (head[0], head[1], head[2] as usize);
        if version != VERSION {
            return Err(Error::format(format!("unsupported DCTT version {version}")));
        }
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().expect("4 bytes")) as usize);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::format("DCTT dims overflow"))?;
        let width = match dtype {
            0 | 1 => 4,
            2 => 8,
            d => return Err(Error::format(format!("unknown DCTT dtype {d}"))),
        };
        let len = n.checked_mul(width).ok_or_else(|| Error::format("DCTT dims overflow"))?;
        let raw = take(bytes, &mut pos, len)?;
        let data = match dtype {
            0 => TensorData::I32(raw.chunks_exact(4).map(|b| i32::from_le_bytes(b.try_into().expect("4"))).collect()),
            1 => TensorData::F32(raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4"))).collect()),
            _ => TensorData::F64(raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8"))).collect()),
        };
        out.push(Record { dims, data });
    }
    Ok(out)
}
