use crate::error::{Error, Result};

const LOOKAHEAD: u32 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableClass {
    Dc,
    Ac,
}

/// A canonical JPEG Huffman table, as carried by a DHT segment.
#[derive(Debug, Clone)]
pub struct HuffmanTable {
    pub class: TableClass,
    pub id: u8,
    pub counts: [u8; 16],
    pub symbols: Vec<u8>,
    /// (code, length) per symbol position, in `symbols` order.
    codes: Vec<(u16, u8)>,
    /// Largest code of each length, or -1 when the length is unused.
    max_code: [i32; 18],
    /// `symbols` index of the first code of each length, minus that code.
    val_offset: [i32; 17],
    /// Indexed by the next `LOOKAHEAD` bits: `(length << 8) | symbol`, 0 if longer.
    fast: Vec<u16>,
}

impl HuffmanTable {
    pub fn new(class: TableClass, id: u8, counts: [u8; 16], symbols: Vec<u8>) -> Result<Self> {
        if id > 3 {
            return Err(Error::malformed(format!("Huffman table id {id}")));
        }
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != symbols.len() || total > 256 || total == 0 {
            return Err(Error::malformed(format!(
                "Huffman table has {total} codes for {} symbols",
                symbols.len()
            )));
        }
        if class == TableClass::Dc && symbols.iter().any(|&s| s > 11) {
            return Err(Error::malformed("DC Huffman symbol exceeds category 11"));
        }

        // Canonical code assignment.
        let mut codes = Vec::with_capacity(total);
        let mut max_code = [-1i32; 18];
        let mut val_offset = [0i32; 17];
        let mut code: u32 = 0;
        let mut k = 0usize;
        for len in 1..=16u8 {
            let n = counts[len as usize - 1] as usize;
            if n > 0 {
                val_offset[len as usize] = k as i32 - code as i32;
                for _ in 0..n {
                    codes.push((code as u16, len));
                    code += 1;
                    k += 1;
                }
                if code > (1 << len) {
                    return Err(Error::malformed("Huffman code lengths overflow"));
                }
                max_code[len as usize] = code as i32 - 1;
                if len == 16 && code == 1 << 16 {
                    return Err(Error::malformed("Huffman table uses the all-ones 16-bit code"));
                }
            }
            code <<= 1;
        }
        max_code[17] = i32::MAX;

        let mut fast = vec![0u16; 1 << LOOKAHEAD];
        for (&(code, len), &sym) in codes.iter().zip(&symbols) {
            if len as u32 <= LOOKAHEAD {
                let shift = LOOKAHEAD - len as u32;
                let start = (code as usize) << shift;
                for e in &mut fast[start..start + (1 << shift)] {
                    *e = ((len as u16) << 8) | sym as u16;
                }
            }
        }
        Ok(HuffmanTable { class, id, counts, symbols, codes, max_code, val_offset, fast })
    }

    /// Code and length for `symbol`, if the table contains it.
    pub fn code_for(&self, symbol: u8) -> Option<(u16, u8)> {
        self.symbols.iter().position(|&s| s == symbol).map(|i| self.codes[i])
    }

    /// Full 256-entry encoder lookup; `(0, 0)` marks an absent symbol.
    pub fn encoder_codes(&self) -> [(u16, u8); 256] {
        let mut out = [(0u16, 0u8); 256];
        for (&c, &s) in self.codes.iter().zip(&self.symbols) {
            out[s as usize] = c;
        }
        out
    }

    /// Decodes one symbol from the next bits. `peek16` holds the upcoming
    /// 16 bits, most significant first. Returns `(symbol, length)`.
    #[inline]
    pub fn lookup(&self, peek16: u32) -> Option<(u8, u8)> {
        let e = self.fast[(peek16 >> (16 - LOOKAHEAD)) as usize];
        if e != 0 {
            return Some((e as u8, (e >> 8) as u8));
        }
        let mut len = LOOKAHEAD + 1;
        while len <= 16 {
            let code = (peek16 >> (16 - len)) as i32;
            if code <= self.max_code[len as usize] {
                let idx = (code + self.val_offset[len as usize]) as usize;
                return self.symbols.get(idx).map(|&s| (s, len as u8));
            }
            len += 1;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::tables::*;

    fn std_tables() -> Vec<HuffmanTable> {
        vec![
            HuffmanTable::new(TableClass::Dc, 0, DC_LUMA_COUNTS, DC_LUMA_SYMBOLS.to_vec()).unwrap(),
            HuffmanTable::new(TableClass::Dc, 1, DC_CHROMA_COUNTS, DC_CHROMA_SYMBOLS.to_vec()).unwrap(),
            HuffmanTable::new(TableClass::Ac, 0, AC_LUMA_COUNTS, AC_LUMA_SYMBOLS.to_vec()).unwrap(),
            HuffmanTable::new(TableClass::Ac, 1, AC_CHROMA_COUNTS, AC_CHROMA_SYMBOLS.to_vec()).unwrap(),
        ]
    }

    #[test]
    fn every_code_decodes_to_its_symbol() {
        for t in std_tables() {
            for &s in &t.symbols {
                let (code, len) = t.code_for(s).unwrap();
                // Pad with ones and zeros to make sure trailing bits are ignored.
                for tail in [0u32, 0xffff] {
                    let peek = ((code as u32) << (16 - len)) | (tail >> len);
                    assert_eq!(t.lookup(peek & 0xffff), Some((s, len)));
                }
            }
        }
    }

    #[test]
    fn codes_are_prefix_free() {
        for t in std_tables() {
            let codes: Vec<(u16, u8)> = t.symbols.iter().map(|&s| t.code_for(s).unwrap()).collect();
            for (i, &(a, la)) in codes.iter().enumerate() {
                for &(b, lb) in &codes[i + 1..] {
                    let l = la.min(lb);
                    assert_ne!(a >> (la - l), b >> (lb - l), "prefix clash");
                }
            }
        }
    }

    #[test]
    fn rejects_inconsistent_counts() {
        let mut counts = [0u8; 16];
        counts[0] = 3; // three 1-bit codes cannot exist
        assert!(HuffmanTable::new(TableClass::Ac, 0, counts, vec![1, 2, 3]).is_err());
        counts[0] = 1;
        assert!(HuffmanTable::new(TableClass::Ac, 0, counts, vec![1, 2]).is_err());
        assert!(HuffmanTable::new(TableClass::Dc, 0, counts, vec![12]).is_err());
        assert!(HuffmanTable::new(TableClass::Dc, 4, counts, vec![1]).is_err());
    }

    #[test]
    fn unknown_code_is_none() {
        // One 1-bit code "0": everything starting with 1 is invalid.
        let mut counts = [0u8; 16];
        counts[0] = 1;
        let t = HuffmanTable::new(TableClass::Ac, 0, counts, vec![7]).unwrap();
        assert_eq!(t.lookup(0x0000), Some((7, 1)));
        assert_eq!(t.lookup(0x8000), None);
    }
}
