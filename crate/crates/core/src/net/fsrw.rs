//! FSRW weights file.
//!
//! Layout (little-endian): magic `FSRW`, version `u8`, tensor count `u32`,
//! then per tensor: name length `u32`, UTF-8 name, ndim `u8`, dims `u32`
//! each, and `f64` values in row-major order. Besides the network
//! parameters the file stores the Adam moments (`adam.m.<name>`,
//! `adam.v.<name>`) and the step counter (`adam.step`, one value).

use std::io::{Read, Write};
use std::path::Path;

use super::model::{AdamState, FreqSrConfig, FreqSrModel, Param, CHANNELS};
use super::tensor::Array;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FSRW";
const VERSION: u8 = 1;

fn write_tensor(out: &mut Vec<u8>, name: &str, a: &Array) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(a.shape().len() as u8);
    for &d in a.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in a.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn to_bytes(model: &FreqSrModel) -> Vec<u8> {
    let params = model.params();
    let adam = model.adam();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&((params.len() * 3 + 1) as u32).to_le_bytes());
    for p in params {
        write_tensor(&mut out, &p.name, &p.value);
    }
    for (p, m) in params.iter().zip(&adam.m) {
        write_tensor(&mut out, &format!("adam.m.{}", p.name), m);
    }
    for (p, v) in params.iter().zip(&adam.v) {
        write_tensor(&mut out, &format!("adam.v.{}", p.name), v);
    }
    let step = Array::from_vec(&[1], vec![adam.step as f64]).expect("one value");
    write_tensor(&mut out, "adam.step", &step);
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| Error::format("weights file is truncated"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

fn read_tensor(c: &mut Cursor) -> Result<(String, Array)> {
    let len = c.u32()? as usize;
    let name = std::str::from_utf8(c.take(len)?)
        .map_err(|_| Error::format("tensor name is not UTF-8"))?
        .to_string();
    let ndim = c.take(1)?[0] as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(c.u32()? as usize);
    }
    let n = shape
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::format("tensor size overflows"))?;
    let raw = c.take(n)?;
    let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    Ok((name, Array::from_vec(&shape, data)?))
}

/// Infers the architecture from tensor names and shapes.
fn infer_config(params: &[(String, Array)]) -> Result<FreqSrConfig> {
    let head = params
        .iter()
        .find(|(n, _)| n == "head.weight")
        .ok_or_else(|| Error::format("missing head.weight"))?;
    let s = head.1.shape();
    if s.len() != 4 || s[1] != CHANNELS {
        return Err(Error::format(format!("head.weight has shape {s:?}")));
    }
    let count = |prefix: &str| params.iter().filter(|(n, _)| n.starts_with(prefix) && n.ends_with(".conv1.weight")).count();
    Ok(FreqSrConfig { features: s[0], depthwise_blocks: count("dw"), standard_blocks: count("res") })
}

pub fn from_bytes(bytes: &[u8]) -> Result<FreqSrModel> {
    let mut c = Cursor { data: bytes, pos: 0 };
    if c.take(4).ok() != Some(&MAGIC[..]) {
        return Err(Error::format("not an FSRW weights file"));
    }
    let version = c.take(1)?[0];
    if version != VERSION {
        return Err(Error::format(format!("unsupported FSRW version {version}")));
    }
    let n = c.u32()? as usize;
    let mut tensors = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        tensors.push(read_tensor(&mut c)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::format("trailing bytes after last tensor"));
    }
    let (mut params, mut m, mut v, mut step) = (Vec::new(), Vec::new(), Vec::new(), None);
    for (name, a) in tensors.iter().cloned() {
        if let Some(rest) = name.strip_prefix("adam.m.") {
            m.push((rest.to_string(), a));
        } else if let Some(rest) = name.strip_prefix("adam.v.") {
            v.push((rest.to_string(), a));
        } else if name == "adam.step" {
            step = a.data().first().copied();
        } else {
            params.push((name, a));
        }
    }
    let config = infer_config(&params)?;
    let names: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    let params: Vec<Param> = params.into_iter().map(|(name, value)| Param { name, value }).collect();
    let adam = if m.is_empty() && v.is_empty() {
        None
    } else {
        let ordered = |xs: Vec<(String, Array)>| -> Result<Vec<Array>> {
            if xs.iter().map(|(n, _)| n).ne(names.iter()) {
                return Err(Error::format("optimizer moments are not aligned with parameters"));
            }
            Ok(xs.into_iter().map(|(_, a)| a).collect())
        };
        Some(AdamState { step: step.unwrap_or(0.0) as u64, m: ordered(m)?, v: ordered(v)? })
    };
    FreqSrModel::from_parts(config, params, adam).map_err(|e| Error::format(e.to_string()))
}

pub fn save_weights(model: &FreqSrModel, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(model))?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<FreqSrModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
