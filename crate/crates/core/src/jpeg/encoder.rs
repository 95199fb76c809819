//! Baseline JPEG encoder with the Annex K tables. Used to synthesize
//! datasets and test inputs.

use super::bits::BitWriter;
use super::huffman::{HuffmanTable, TableClass};
use super::tables::*;
use crate::blocks::{Plane, RgbImage, Subsampling};
use crate::error::{Error, Result};
use crate::spatial::{fdct8, rgb_to_ycbcr};

struct EntropyTables {
    dc: [[(u16, u8); 256]; 2],
    ac: [[(u16, u8); 256]; 2],
}

fn standard_tables() -> Result<(Vec<HuffmanTable>, EntropyTables)> {
    let tables = vec![
        HuffmanTable::new(TableClass::Dc, 0, DC_LUMA_COUNTS, DC_LUMA_SYMBOLS.to_vec())?,
        HuffmanTable::new(TableClass::Ac, 0, AC_LUMA_COUNTS, AC_LUMA_SYMBOLS.to_vec())?,
        HuffmanTable::new(TableClass::Dc, 1, DC_CHROMA_COUNTS, DC_CHROMA_SYMBOLS.to_vec())?,
        HuffmanTable::new(TableClass::Ac, 1, AC_CHROMA_COUNTS, AC_CHROMA_SYMBOLS.to_vec())?,
    ];
    let codes = EntropyTables {
        dc: [tables[0].encoder_codes(), tables[2].encoder_codes()],
        ac: [tables[1].encoder_codes(), tables[3].encoder_codes()],
    };
    Ok((tables, codes))
}

/// Encodes `img` as a baseline sequential JPEG (JFIF, Huffman, 8-bit) at the
/// given 1-100 quality. No restart markers are emitted.
pub fn encode_baseline(img: &RgbImage, quality: u8, subsampling: Subsampling) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidArgument(format!("quality must be 1-100, got {quality}")));
    }
    let (w, h) = (img.width(), img.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::InvalidDimensions(format!("{w}x{h} exceeds JPEG limits")));
    }
    let f = subsampling.chroma_factor();
    let mcu = 8 * f;
    let (pw, ph) = (w.div_ceil(mcu) * mcu, h.div_ceil(mcu) * mcu);

    let (y, cb, cr) = rgb_to_ycbcr(img);
    let y = pad(&y, pw, ph);
    let (cb, cr) = match subsampling {
        Subsampling::S444 => (pad(&cb, pw, ph), pad(&cr, pw, ph)),
        Subsampling::S420 => (box2(&pad(&cb, pw, ph)), box2(&pad(&cr, pw, ph))),
    };

    let luma_q = scaled_quant(&LUMA_QUANT, quality);
    let chroma_q = scaled_quant(&CHROMA_QUANT, quality);
    let (tables, codes) = standard_tables()?;

    let mut out = Vec::with_capacity(w * h);
    out.extend_from_slice(&[0xFF, 0xD8]);
    // JFIF APP0, 1:1 aspect.
    out.extend_from_slice(&[0xFF, 0xE0, 0, 16, b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0]);
    for (id, q) in [(0u8, &luma_q), (1u8, &chroma_q)] {
        out.extend_from_slice(&[0xFF, 0xDB, 0, 67, id]);
        out.extend(ZIGZAG.iter().map(|&n| q[n] as u8));
    }
    let samp = ((f as u8) << 4) | f as u8;
    out.extend_from_slice(&[0xFF, 0xC0, 0, 17, 8]);
    out.extend_from_slice(&(h as u16).to_be_bytes());
    out.extend_from_slice(&(w as u16).to_be_bytes());
    out.extend_from_slice(&[3, 1, samp, 0, 2, 0x11, 1, 3, 0x11, 1]);
    for t in &tables {
        let class = match t.class {
            TableClass::Dc => 0u8,
            TableClass::Ac => 1u8,
        };
        let len = 2 + 1 + 16 + t.symbols.len();
        out.extend_from_slice(&[0xFF, 0xC4]);
        out.extend_from_slice(&(len as u16).to_be_bytes());
        out.push((class << 4) | t.id);
        out.extend_from_slice(&t.counts);
        out.extend_from_slice(&t.symbols);
    }
    out.extend_from_slice(&[0xFF, 0xDA, 0, 12, 3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);

    let mut bits = BitWriter::new(out);
    let mut preds = [0i32; 3];
    let (mx, my) = (pw / mcu, ph / mcu);
    for by in 0..my {
        for bx in 0..mx {
            for r in 0..f {
                for s in 0..f {
                    let q = quantize(&y, (bx * f + s) * 8, (by * f + r) * 8, &luma_q);
                    encode_block(&mut bits, &q, &mut preds[0], &codes, 0);
                }
            }
            let q = quantize(&cb, bx * 8, by * 8, &chroma_q);
            encode_block(&mut bits, &q, &mut preds[1], &codes, 1);
            let q = quantize(&cr, bx * 8, by * 8, &chroma_q);
            encode_block(&mut bits, &q, &mut preds[2], &codes, 1);
        }
    }
    let mut out = bits.finish();
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

/// Edge-replicating pad to `w x h`.
fn pad(p: &Plane, w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |x, y| p.at(x.min(p.width() - 1), y.min(p.height() - 1))).expect("non-empty")
}

/// 2x2 box average; input dimensions are even.
fn box2(p: &Plane) -> Plane {
    Plane::from_fn(p.width() / 2, p.height() / 2, |x, y| {
        (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1)) / 4.0
    })
    .expect("non-empty")
}

/// Forward DCT of the block at `(x0, y0)` and quantization; zigzag order.
fn quantize(p: &Plane, x0: usize, y0: usize, q: &[u16; 64]) -> [i32; 64] {
    let px = std::array::from_fn(|i| p.at(x0 + i % 8, y0 + i / 8) - 128.0);
    let coeffs = fdct8(&px);
    std::array::from_fn(|k| {
        let n = ZIGZAG[k];
        (coeffs[n] / q[n] as f64).round() as i32
    })
}

fn magnitude_category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

fn encode_block(bits: &mut BitWriter, zz: &[i32; 64], pred: &mut i32, codes: &EntropyTables, t: usize) {
    let diff = zz[0] - *pred;
    *pred = zz[0];
    let cat = magnitude_category(diff);
    let (code, len) = codes.dc[t][cat as usize];
    bits.put(code as u32, len as u32);
    put_value(bits, diff, cat);

    let mut run = 0u32;
    for &v in &zz[1..] {
        if v == 0 {
            run += 1;
            continue;
        }
        while run > 15 {
            let (code, len) = codes.ac[t][0xF0];
            bits.put(code as u32, len as u32);
            run -= 16;
        }
        let cat = magnitude_category(v);
        let (code, len) = codes.ac[t][((run << 4) | cat) as usize];
        bits.put(code as u32, len as u32);
        put_value(bits, v, cat);
        run = 0;
    }
    if run > 0 {
        let (code, len) = codes.ac[t][0x00];
        bits.put(code as u32, len as u32);
    }
}

fn put_value(bits: &mut BitWriter, v: i32, cat: u32) {
    if cat == 0 {
        return;
    }
    let raw = if v < 0 { v - 1 } else { v };
    bits.put(raw as u32 & ((1 << cat) - 1), cat);
}
