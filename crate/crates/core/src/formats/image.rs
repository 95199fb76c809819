//! 8-bit RGB raster files: binary PPM (P6) and PNG.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::blocks::RgbImage;
use crate::error::{Error, Result};

pub fn ppm_bytes(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// Parses a binary PPM with maxval 255. Comments are allowed in the header.
pub fn parse_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("PPM header is truncated"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P6" {
        return Err(Error::format("only binary PPM (P6) is supported"));
    }
    let mut num = || -> Result<usize> { token()?.parse().map_err(|_| Error::format("bad PPM header field")) };
    let (w, h, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(Error::format(format!("PPM maxval {maxval} is not supported")));
    }
    let start = pos + 1;
    let need = w.checked_mul(h).and_then(|n| n.checked_mul(3)).ok_or_else(|| Error::format("PPM too large"))?;
    let data = bytes.get(start..start + need).ok_or_else(|| Error::format("PPM pixel data is truncated"))?;
    RgbImage::new(w, h, data.to_vec())
}

pub fn png_bytes(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::format(e.to_string()))?;
        w.write_image_data(img.data()).map_err(|e| Error::format(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes a PNG to RGB8. Grayscale is replicated, alpha dropped, 16-bit
/// samples reduced to 8 bits.
pub fn parse_png(reader: impl std::io::Read) -> Result<RgbImage> {
    let mut dec = png::Decoder::new(reader);
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut r = dec.read_info().map_err(|e| Error::format(e.to_string()))?;
    let mut buf = vec![0; r.output_buffer_size()];
    let info = r.next_frame(&mut buf).map_err(|e| Error::format(e.to_string()))?;
    let px = &buf[..info.buffer_size()];
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => px.to_vec(),
        png::ColorType::Rgba => px.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => px.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => px.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        png::ColorType::Indexed => return Err(Error::format("unexpanded palette PNG")),
    };
    RgbImage::new(info.width as usize, info.height as usize, data)
}

fn is_ppm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm") || e.eq_ignore_ascii_case("pnm"))
}

/// Writes PPM for `.ppm`/`.pnm` paths and PNG otherwise.
pub fn write_image(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_ppm(path) { ppm_bytes(img) } else { png_bytes(img)? };
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

/// Reads a PPM or PNG, chosen by file signature.
pub fn read_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"P6") {
        parse_ppm(&bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        parse_png(BufReader::new(&bytes[..]))
    } else {
        Err(Error::format("unrecognized image file (expected PPM or PNG)"))
    }
}
