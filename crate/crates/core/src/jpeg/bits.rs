//! Entropy-coded segment bit I/O with 0xFF byte stuffing.

use crate::error::{Error, Result};

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    /// Valid bits, left-aligned.
    acc: u64,
    bits: u32,
    /// Zero bits appended after a marker or end of data; still in `acc`.
    padded: u32,
    /// Marker code found at `pos` (which points at its 0xFF).
    marker: Option<u8>,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], pos: usize) -> Self {
        BitReader { data, pos, acc: 0, bits: 0, padded: 0, marker: None }
    }

    #[inline]
    fn next_byte(&mut self) -> u8 {
        if self.marker.is_some() || self.pos >= self.data.len() {
            self.padded += 8;
            return 0;
        }
        let b = self.data[self.pos];
        if b != 0xFF {
            self.pos += 1;
            return b;
        }
        // Skip fill bytes to find out whether this is a stuffed 0xFF.
        let mut i = self.pos + 1;
        while i < self.data.len() && self.data[i] == 0xFF {
            i += 1;
        }
        match self.data.get(i) {
            Some(0) if i == self.pos + 1 => {
                self.pos += 2;
                0xFF
            }
            Some(&m) => {
                self.marker = Some(m);
                self.padded += 8;
                0
            }
            None => {
                self.pos = self.data.len();
                self.padded += 8;
                0
            }
        }
    }

    #[inline]
    fn fill(&mut self) {
        while self.bits <= 56 {
            let b = self.next_byte();
            self.acc |= (b as u64) << (56 - self.bits);
            self.bits += 8;
        }
    }

    /// Next 16 bits without consuming them.
    #[inline]
    pub fn peek16(&mut self) -> u32 {
        if self.bits < 16 {
            self.fill();
        }
        (self.acc >> 48) as u32
    }

    #[inline]
    pub fn consume(&mut self, n: u32) -> Result<()> {
        if n > self.bits - self.padded {
            return Err(Error::malformed("entropy-coded data ends mid-block"));
        }
        self.acc <<= n;
        self.bits -= n;
        Ok(())
    }

    #[inline]
    pub fn get_bits(&mut self, n: u32) -> Result<u32> {
        if n == 0 {
            return Ok(0);
        }
        if self.bits < n {
            self.fill();
        }
        let v = (self.acc >> (64 - n)) as u32;
        self.consume(n)?;
        Ok(v)
    }

    /// Reads an `n`-bit magnitude and sign-extends it (JPEG EXTEND).
    #[inline]
    pub fn receive_extend(&mut self, n: u32) -> Result<i32> {
        if n == 0 {
            return Ok(0);
        }
        if n > 16 {
            return Err(Error::malformed(format!("coefficient magnitude category {n}")));
        }
        let v = self.get_bits(n)? as i32;
        Ok(if v < 1 << (n - 1) { v - (1 << n) + 1 } else { v })
    }

    /// Drops the partial byte and consumes the expected RSTn marker.
    pub fn restart(&mut self, expected: u8) -> Result<()> {
        self.acc = 0;
        self.bits = 0;
        self.padded = 0;
        if self.marker.is_none() {
            // Any unread bytes before the marker would be leftover data.
            if self.data.get(self.pos) != Some(&0xFF) {
                return Err(Error::malformed("missing restart marker"));
            }
            let mut i = self.pos + 1;
            while i < self.data.len() && self.data[i] == 0xFF {
                i += 1;
            }
            self.marker = self.data.get(i).copied();
        }
        match self.marker {
            Some(m) if m == 0xD0 + expected => {
                while self.data[self.pos] == 0xFF {
                    self.pos += 1;
                }
                self.pos += 1;
                self.marker = None;
                Ok(())
            }
            Some(m) => Err(Error::malformed(format!(
                "expected RST{expected}, found marker 0x{m:02X}"
            ))),
            None => Err(Error::malformed("scan truncated before restart marker")),
        }
    }

    /// Byte offset of the next marker after the entropy-coded data.
    pub fn marker_position(&self) -> usize {
        if self.marker.is_some() {
            return self.pos;
        }
        let mut i = self.pos;
        while i + 1 < self.data.len() {
            if self.data[i] == 0xFF && self.data[i + 1] != 0 && self.data[i + 1] != 0xFF {
                return i;
            }
            i += 1;
        }
        self.data.len()
    }
}

pub struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    bits: u32,
}

impl BitWriter {
    pub fn new(out: Vec<u8>) -> Self {
        BitWriter { out, acc: 0, bits: 0 }
    }

    #[inline]
    pub fn put(&mut self, code: u32, len: u32) {
        debug_assert!(len <= 16);
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | (code & ((1 << len) - 1));
        self.bits += len;
        while self.bits >= 8 {
            let b = (self.acc >> (self.bits - 8)) as u8;
            self.out.push(b);
            if b == 0xFF {
                self.out.push(0);
            }
            self.bits -= 8;
        }
        self.acc &= (1 << self.bits) - 1;
    }

    /// Pads the final byte with one bits and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.bits > 0 {
            let pad = 8 - self.bits;
            self.put((1 << pad) - 1, pad);
        }
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stuffing_roundtrip() {
        let mut w = BitWriter::new(Vec::new());
        w.put(0xFF, 8);
        w.put(0b101, 3);
        w.put(0x1234, 16);
        let bytes = w.finish();
        assert_eq!(&bytes[..2], &[0xFF, 0x00]);
        let mut r = BitReader::new(&bytes, 0);
        assert_eq!(r.get_bits(8).unwrap(), 0xFF);
        assert_eq!(r.get_bits(3).unwrap(), 0b101);
        assert_eq!(r.get_bits(16).unwrap(), 0x1234);
    }

    #[test]
    fn reading_past_marker_fails() {
        let data = [0xAB, 0xFF, 0xD9];
        let mut r = BitReader::new(&data, 0);
        assert_eq!(r.get_bits(8).unwrap(), 0xAB);
        assert!(r.get_bits(1).is_err());
        assert_eq!(r.marker_position(), 1);
    }

    #[test]
    fn extend_sign() {
        let data = [0b0100_0000];
        let mut r = BitReader::new(&data, 0);
        assert_eq!(r.receive_extend(2).unwrap(), -2);
        let data = [0b1100_0000];
        let mut r = BitReader::new(&data, 0);
        assert_eq!(r.receive_extend(2).unwrap(), 3);
    }

    #[test]
    fn restart_consumes_marker() {
        let data = [0b1010_1111, 0xFF, 0xD0, 0x80];
        let mut r = BitReader::new(&data, 0);
        assert_eq!(r.get_bits(4).unwrap(), 0b1010);
        r.restart(0).unwrap();
        assert_eq!(r.get_bits(1).unwrap(), 1);
        let mut r = BitReader::new(&data, 0);
        r.get_bits(4).unwrap();
        assert!(r.restart(1).is_err());
    }
}
