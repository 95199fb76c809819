//! Baseline JPEG parsing down to dequantized DCT coefficients.

use super::bits::BitReader;
use super::huffman::{HuffmanTable, TableClass};
use super::tables::ZIGZAG;
use crate::blocks::{Block, Chroma, DctImage, DctPlane, RgbImage, Subsampling};
use crate::error::{Error, Result};
use crate::spatial;

/// A DQT table. `values` are in zigzag order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTable {
    pub id: u8,
    pub values: [u16; 64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub id: u8,
    pub h_samp: u8,
    pub v_samp: u8,
    pub quant_id: u8,
}

/// Parsed SOF0/SOF1 header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInfo {
    pub width: u16,
    pub height: u16,
    pub precision: u8,
    pub components: Vec<Component>,
}

impl FrameInfo {
    fn max_samp(&self) -> (usize, usize) {
        let h = self.components.iter().map(|c| c.h_samp as usize).max().unwrap_or(1);
        let v = self.components.iter().map(|c| c.v_samp as usize).max().unwrap_or(1);
        (h, v)
    }

    fn subsampling(&self) -> Result<Subsampling> {
        match self.components.as_slice() {
            [_] => Ok(Subsampling::S444),
            [y, cb, cr] => {
                let chroma_unit = [cb, cr].iter().all(|c| c.h_samp == 1 && c.v_samp == 1);
                match (y.h_samp, y.v_samp, chroma_unit) {
                    (1, 1, true) => Ok(Subsampling::S444),
                    (2, 2, true) => Ok(Subsampling::S420),
                    _ => Err(Error::UnsupportedSubsampling(format!(
                        "Y {}x{}, Cb {}x{}, Cr {}x{}",
                        y.h_samp, y.v_samp, cb.h_samp, cb.v_samp, cr.h_samp, cr.v_samp
                    ))),
                }
            }
            other => Err(Error::UnsupportedSubsampling(format!("{} components", other.len()))),
        }
    }

    /// MCU-padded block grid `(rows, cols)` of component `i`.
    fn grid(&self, i: usize) -> (usize, usize) {
        let (w, h) = (self.width as usize, self.height as usize);
        if self.components.len() == 1 {
            return (h.div_ceil(8), w.div_ceil(8));
        }
        let (hmax, vmax) = self.max_samp();
        let c = &self.components[i];
        (h.div_ceil(8 * vmax) * c.v_samp as usize, w.div_ceil(8 * hmax) * c.h_samp as usize)
    }

    /// Blocks of component `i` that hold image data (non-interleaved scan extent).
    fn coded_extent(&self, i: usize) -> (usize, usize) {
        let (w, h) = (self.width as usize, self.height as usize);
        if self.components.len() == 1 {
            return (h.div_ceil(8), w.div_ceil(8));
        }
        let (hmax, vmax) = self.max_samp();
        let c = &self.components[i];
        let cw = (w * c.h_samp as usize).div_ceil(hmax);
        let ch = (h * c.v_samp as usize).div_ceil(vmax);
        (ch.div_ceil(8), cw.div_ceil(8))
    }
}

struct ScanComponent {
    index: usize,
    dc: usize,
    ac: usize,
}

struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
    quant: [Option<QuantTable>; 4],
    dc_tables: [Option<HuffmanTable>; 4],
    ac_tables: [Option<HuffmanTable>; 4],
    restart_interval: u16,
    frame: Option<FrameInfo>,
    planes: Vec<Vec<Block>>,
    coded: Vec<bool>,
}

/// Parses a baseline JPEG into dequantized coefficient blocks (natural
/// order). No inverse transform is applied: a flat mid-grey image decodes to
/// all-zero blocks.
pub fn decode_to_dct(bytes: &[u8]) -> Result<DctImage> {
    Decoder::new(bytes).run()
}

/// Full decode to pixels: [`decode_to_dct`] followed by
/// [`spatial::reconstruct_rgb`].
pub fn decode_to_rgb(bytes: &[u8]) -> Result<RgbImage> {
    spatial::reconstruct_rgb(&decode_to_dct(bytes)?)
}

/// Reads only the frame header.
pub fn read_frame_info(bytes: &[u8]) -> Result<FrameInfo> {
    let mut d = Decoder::new(bytes);
    d.expect_soi()?;
    loop {
        let marker = d.next_marker()?;
        match marker {
            0xC0 | 0xC1 => return d.parse_sof(marker),
            0xD9 => return Err(Error::malformed("no frame header before EOI")),
            _ => d.handle_other(marker)?,
        }
    }
}

impl<'a> Decoder<'a> {
    fn new(data: &'a [u8]) -> Self {
        Decoder {
            data,
            pos: 0,
            quant: Default::default(),
            dc_tables: Default::default(),
            ac_tables: Default::default(),
            restart_interval: 0,
            frame: None,
            planes: Vec::new(),
            coded: Vec::new(),
        }
    }

    fn expect_soi(&mut self) -> Result<()> {
        if self.data.len() < 2 || self.data[0] != 0xFF || self.data[1] != 0xD8 {
            return Err(Error::malformed("missing SOI marker"));
        }
        self.pos = 2;
        Ok(())
    }

    fn run(mut self) -> Result<DctImage> {
        self.expect_soi()?;
        let mut scans = 0usize;
        loop {
            if self.pos >= self.data.len() && scans > 0 {
                // Missing EOI: accept if every component was coded.
                break;
            }
            let marker = self.next_marker()?;
            match marker {
                0xC0 | 0xC1 => {
                    if self.frame.is_some() {
                        return Err(Error::malformed("multiple frame headers"));
                    }
                    let frame = self.parse_sof(marker)?;
                    frame.subsampling()?;
                    self.planes = (0..frame.components.len())
                        .map(|i| {
                            let (r, c) = frame.grid(i);
                            vec![[0.0; 64]; r * c]
                        })
                        .collect();
                    self.coded = vec![false; frame.components.len()];
                    self.frame = Some(frame);
                }
                0xDA => {
                    self.decode_scan()?;
                    scans += 1;
                }
                0xD9 => break,
                _ => self.handle_other(marker)?,
            }
        }
        self.finish()
    }

    fn finish(self) -> Result<DctImage> {
        let frame = self.frame.ok_or_else(|| Error::malformed("no frame header"))?;
        if let Some(i) = self.coded.iter().position(|&c| !c) {
            return Err(Error::malformed(format!(
                "component {} never coded in any scan",
                frame.components[i].id
            )));
        }
        let subsampling = frame.subsampling()?;
        let mut planes = self
            .planes
            .into_iter()
            .enumerate()
            .map(|(i, blocks)| {
                let (r, c) = frame.grid(i);
                DctPlane::from_blocks(r, c, blocks)
            })
            .collect::<Result<Vec<_>>>()?;
        let chroma = if planes.len() == 3 {
            let cr = planes.pop().expect("three planes");
            let cb = planes.pop().expect("three planes");
            Some(Chroma { cb, cr })
        } else {
            None
        };
        let y = planes.pop().expect("luma plane");
        DctImage::new(y, chroma, frame.width as usize, frame.height as usize, subsampling)
    }

    /// Reads the next marker code, skipping fill bytes.
    fn next_marker(&mut self) -> Result<u8> {
        let d = self.data;
        if self.pos >= d.len() {
            return Err(Error::malformed("unexpected end of data"));
        }
        if d[self.pos] != 0xFF {
            return Err(Error::malformed(format!("expected marker at byte {}", self.pos)));
        }
        while self.pos < d.len() && d[self.pos] == 0xFF {
            self.pos += 1;
        }
        let m = *d.get(self.pos).ok_or_else(|| Error::malformed("truncated marker"))?;
        self.pos += 1;
        Ok(m)
    }

    /// Returns the payload of a length-prefixed segment and advances past it.
    fn segment(&mut self) -> Result<&'a [u8]> {
        let d = self.data;
        if self.pos + 2 > d.len() {
            return Err(Error::malformed("truncated segment length"));
        }
        let len = u16::from_be_bytes([d[self.pos], d[self.pos + 1]]) as usize;
        if len < 2 || self.pos + len > d.len() {
            return Err(Error::malformed(format!("bad segment length {len}")));
        }
        let payload = &d[self.pos + 2..self.pos + len];
        self.pos += len;
        Ok(payload)
    }

    fn handle_other(&mut self, marker: u8) -> Result<()> {
        match marker {
            0xDB => self.parse_dqt(),
            0xC4 => self.parse_dht(),
            0xDD => {
                let p = self.segment()?;
                if p.len() != 2 {
                    return Err(Error::malformed("bad DRI length"));
                }
                self.restart_interval = u16::from_be_bytes([p[0], p[1]]);
                Ok(())
            }
            0xC2 | 0xC6 | 0xCA | 0xCE => {
                Err(Error::UnsupportedMarker(format!("progressive frame (SOF{})", marker - 0xC0)))
            }
            0xC3 | 0xC7 | 0xCB | 0xCF => {
                Err(Error::UnsupportedMarker(format!("lossless frame (SOF{})", marker - 0xC0)))
            }
            0xC5 | 0xDE | 0xDF => Err(Error::UnsupportedMarker("hierarchical JPEG".into())),
            0xC9 | 0xCC => Err(Error::UnsupportedMarker("arithmetic coding".into())),
            0xDC => Err(Error::UnsupportedMarker("DNL marker".into())),
            0xD8 => Err(Error::malformed("unexpected SOI")),
            0xD0..=0xD7 => Err(Error::malformed("restart marker outside a scan")),
            0x01 => Ok(()),
            // APPn, COM and anything else length-prefixed is skipped.
            _ => self.segment().map(|_| ()),
        }
    }

    fn parse_dqt(&mut self) -> Result<()> {
        let mut p = self.segment()?;
        while !p.is_empty() {
            let (pq, tq) = (p[0] >> 4, p[0] & 15);
            if pq != 0 {
                return Err(Error::UnsupportedMarker("16-bit quantization table".into()));
            }
            if tq > 3 || p.len() < 65 {
                return Err(Error::malformed("bad DQT segment"));
            }
            let mut values = [0u16; 64];
            for (v, &b) in values.iter_mut().zip(&p[1..65]) {
                if b == 0 {
                    return Err(Error::malformed("zero quantization entry"));
                }
                *v = b as u16;
            }
            self.quant[tq as usize] = Some(QuantTable { id: tq, values });
            p = &p[65..];
        }
        Ok(())
    }

    fn parse_dht(&mut self) -> Result<()> {
        let mut p = self.segment()?;
        while !p.is_empty() {
            if p.len() < 17 {
                return Err(Error::malformed("bad DHT segment"));
            }
            let (tc, th) = (p[0] >> 4, p[0] & 15);
            let class = match tc {
                0 => TableClass::Dc,
                1 => TableClass::Ac,
                _ => return Err(Error::malformed(format!("Huffman table class {tc}"))),
            };
            let counts: [u8; 16] = p[1..17].try_into().expect("16 bytes");
            let n: usize = counts.iter().map(|&c| c as usize).sum();
            if p.len() < 17 + n {
                return Err(Error::malformed("DHT segment shorter than its counts"));
            }
            let table = HuffmanTable::new(class, th, counts, p[17..17 + n].to_vec())?;
            match class {
                TableClass::Dc => self.dc_tables[th as usize] = Some(table),
                TableClass::Ac => self.ac_tables[th as usize] = Some(table),
            }
            p = &p[17 + n..];
        }
        Ok(())
    }

    fn parse_sof(&mut self, marker: u8) -> Result<FrameInfo> {
        let p = self.segment()?;
        if p.len() < 6 {
            return Err(Error::malformed("short SOF segment"));
        }
        let precision = p[0];
        if precision != 8 {
            return Err(Error::UnsupportedMarker(format!("{precision}-bit precision")));
        }
        let height = u16::from_be_bytes([p[1], p[2]]);
        let width = u16::from_be_bytes([p[3], p[4]]);
        let n = p[5] as usize;
        if p.len() != 6 + 3 * n {
            return Err(Error::malformed("SOF length does not match component count"));
        }
        if height == 0 {
            return Err(Error::UnsupportedMarker("height defined by DNL".into()));
        }
        if width == 0 {
            return Err(Error::malformed("zero image width"));
        }
        let components = p[6..]
            .chunks_exact(3)
            .map(|c| Component { id: c[0], h_samp: c[1] >> 4, v_samp: c[1] & 15, quant_id: c[2] })
            .collect::<Vec<_>>();
        for c in &components {
            if !(1..=4).contains(&c.h_samp) || !(1..=4).contains(&c.v_samp) || c.quant_id > 3 {
                return Err(Error::malformed(format!("bad parameters for component {}", c.id)));
            }
        }
        let _ = marker;
        Ok(FrameInfo { width, height, precision, components })
    }

    fn decode_scan(&mut self) -> Result<()> {
        let frame = self.frame.clone().ok_or_else(|| Error::malformed("SOS before SOF"))?;
        let p = self.segment()?;
        let ns = *p.first().ok_or_else(|| Error::malformed("empty SOS"))? as usize;
        if ns == 0 || ns > 4 || p.len() != 4 + 2 * ns {
            return Err(Error::malformed("bad SOS segment"));
        }
        let mut comps = Vec::with_capacity(ns);
        for c in p[1..1 + 2 * ns].chunks_exact(2) {
            let index = frame
                .components
                .iter()
                .position(|fc| fc.id == c[0])
                .ok_or_else(|| Error::malformed(format!("scan references unknown component {}", c[0])))?;
            let (dc, ac) = ((c[1] >> 4) as usize, (c[1] & 15) as usize);
            if dc > 3 || ac > 3 || self.dc_tables[dc].is_none() || self.ac_tables[ac].is_none() {
                return Err(Error::malformed("scan references a missing Huffman table"));
            }
            let q = frame.components[index].quant_id as usize;
            if self.quant[q].is_none() {
                return Err(Error::malformed(format!("missing quantization table {q}")));
            }
            comps.push(ScanComponent { index, dc, ac });
        }
        let tail = &p[1 + 2 * ns..];
        if tail != [0, 63, 0] {
            return Err(Error::UnsupportedMarker(format!(
                "spectral selection {}..{} / approximation {:#x} (not sequential)",
                tail[0], tail[1], tail[2]
            )));
        }

        let quant: Vec<[f64; 64]> = comps
            .iter()
            .map(|c| {
                let q = self.quant[frame.components[c.index].quant_id as usize].as_ref().expect("checked");
                std::array::from_fn(|k| q.values[k] as f64)
            })
            .collect();
        let tables: Vec<(&HuffmanTable, &HuffmanTable)> = comps
            .iter()
            .map(|c| (self.dc_tables[c.dc].as_ref().expect("checked"), self.ac_tables[c.ac].as_ref().expect("checked")))
            .collect();

        // Block coordinates per MCU, per scan component.
        let (mcus_x, mcus_y, layout): (usize, usize, Vec<Vec<(usize, usize)>>) = if ns == 1 {
            let (rows, cols) = frame.coded_extent(comps[0].index);
            (cols, rows, vec![vec![(0, 0)]])
        } else {
            let (hmax, vmax) = frame.max_samp();
            let mx = (frame.width as usize).div_ceil(8 * hmax);
            let my = (frame.height as usize).div_ceil(8 * vmax);
            let layout = comps
                .iter()
                .map(|c| {
                    let fc = &frame.components[c.index];
                    (0..fc.v_samp as usize)
                        .flat_map(|r| (0..fc.h_samp as usize).map(move |s| (r, s)))
                        .collect()
                })
                .collect();
            (mx, my, layout)
        };
        let samp: Vec<(usize, usize)> = comps
            .iter()
            .map(|c| {
                if ns == 1 {
                    (1, 1)
                } else {
                    let fc = &frame.components[c.index];
                    (fc.v_samp as usize, fc.h_samp as usize)
                }
            })
            .collect();
        let grid_cols: Vec<usize> = comps.iter().map(|c| frame.grid(c.index).1).collect();

        let mut reader = BitReader::new(self.data, self.pos);
        let mut preds = vec![0i32; ns];
        let total = mcus_x * mcus_y;
        let ri = self.restart_interval as usize;
        let mut next_rst = 0u8;
        for mcu in 0..total {
            if ri > 0 && mcu > 0 && mcu % ri == 0 {
                reader.restart(next_rst)?;
                next_rst = (next_rst + 1) & 7;
                preds.iter_mut().for_each(|p| *p = 0);
            }
            let (my, mx) = (mcu / mcus_x, mcu % mcus_x);
            for (k, c) in comps.iter().enumerate() {
                let (vs, hs) = samp[k];
                for &(r, s) in &layout[k] {
                    let row = my * vs + r;
                    let col = mx * hs + s;
                    let block = &mut self.planes[c.index][row * grid_cols[k] + col];
                    decode_block(&mut reader, tables[k].0, tables[k].1, &quant[k], &mut preds[k], block)?;
                }
            }
        }
        for c in &comps {
            self.coded[c.index] = true;
        }
        self.pos = reader.marker_position();
        Ok(())
    }
}

#[inline]
fn decode_symbol(reader: &mut BitReader<'_>, table: &HuffmanTable) -> Result<u8> {
    let peek = reader.peek16();
    let (sym, len) = table
        .lookup(peek)
        .ok_or_else(|| Error::malformed("invalid Huffman code"))?;
    reader.consume(len as u32)?;
    Ok(sym)
}

#[inline]
fn decode_block(
    reader: &mut BitReader<'_>,
    dc: &HuffmanTable,
    ac: &HuffmanTable,
    quant: &[f64; 64],
    pred: &mut i32,
    block: &mut Block,
) -> Result<()> {
    *block = [0.0; 64];
    let t = decode_symbol(reader, dc)? as u32;
    let diff = reader.receive_extend(t)?;
    *pred += diff;
    block[0] = *pred as f64 * quant[0];
    let mut k = 1usize;
    while k < 64 {
        let rs = decode_symbol(reader, ac)?;
        let (run, size) = ((rs >> 4) as usize, (rs & 15) as u32);
        if size == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break;
        }
        k += run;
        if k > 63 {
            return Err(Error::malformed("AC run past end of block"));
        }
        let v = reader.receive_extend(size)?;
        block[ZIGZAG[k]] = v as f64 * quant[k];
        k += 1;
    }
    if k > 64 {
        return Err(Error::malformed("AC run past end of block"));
    }
    Ok(())
}
