//! Paired LR/HR JPEG corpora and their manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::SCHEMA_VERSION;
use crate::blocks::{RgbImage, Subsampling};
use crate::error::{Error, Result};
use crate::formats::read_image;
use crate::jpeg::{decode_to_rgb, encode_baseline};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub name: String,
    /// Paths relative to the manifest's directory.
    pub lr: String,
    pub hr: String,
    pub source_width: usize,
    pub source_height: usize,
    pub hr_width: usize,
    pub hr_height: usize,
    pub lr_width: usize,
    pub lr_height: usize,
}

impl Pair {
    pub fn trimmed(&self) -> bool {
        (self.source_width, self.source_height) != (self.hr_width, self.hr_height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scale: usize,
    pub quality: u8,
    pub subsampling: Subsampling,
    pub pairs: Vec<Pair>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<(Manifest, PathBuf)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(format!("manifest: {e}")))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self).expect("plain data"))?;
        Ok(())
    }
}

/// Mean of each `scale x scale` cell, rounded. Dimensions must be multiples
/// of `scale`.
pub fn box_downsample(img: &RgbImage, scale: usize) -> Result<RgbImage> {
    if scale == 0 || !img.width().is_multiple_of(scale) || !img.height().is_multiple_of(scale) {
        return Err(Error::InvalidDimensions(format!(
            "{}x{} is not divisible by {scale}",
            img.width(),
            img.height()
        )));
    }
    let n = (scale * scale) as u32;
    RgbImage::from_fn(img.width() / scale, img.height() / scale, |x, y| {
        let mut acc = [0u32; 3];
        for dy in 0..scale {
            for dx in 0..scale {
                let p = img.pixel(x * scale + dx, y * scale + dy);
                for c in 0..3 {
                    acc[c] += p[c] as u32;
                }
            }
        }
        acc.map(|s| ((s + n / 2) / n) as u8)
    })
}

/// Top-left `width x height` region.
pub fn trim(img: &RgbImage, width: usize, height: usize) -> Result<RgbImage> {
    if width > img.width() || height > img.height() {
        return Err(Error::InvalidDimensions("trim target exceeds image".into()));
    }
    RgbImage::from_fn(width, height, |x, y| img.pixel(x, y))
}

/// Reads PNG, PPM or JPEG.
pub fn load_raster(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(&[0xFF, 0xD8]) {
        decode_to_rgb(&bytes)
    } else {
        read_image(path)
    }
}

fn is_raster(path: &Path) -> bool {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    matches!(ext.as_deref(), Some("png" | "ppm" | "pnm" | "jpg" | "jpeg"))
}

/// Sorted raster files in `dir`.
pub fn list_rasters(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_raster(p))
        .collect();
    v.sort();
    Ok(v)
}

/// Builds `out/hr/*.jpg`, `out/lr/*.jpg` and `out/manifest.json` from the
/// rasters in `hr_dir`. HR dims are trimmed down to multiples of
/// `16 * scale` so that both images tile into whole 4:2:0 MCUs.
pub fn make_dataset(hr_dir: &Path, out_dir: &Path, scale: usize, quality: u8) -> Result<Manifest> {
    if scale < 2 {
        return Err(Error::InvalidArgument(format!("scale must be at least 2, got {scale}")));
    }
    let inputs = list_rasters(hr_dir)?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    fs::create_dir_all(out_dir.join("hr"))?;
    fs::create_dir_all(out_dir.join("lr"))?;
    let unit = 16 * scale;
    let mut pairs = Vec::with_capacity(inputs.len());
    for path in inputs {
        let img = load_raster(&path)?;
        let (w, h) = (img.width() / unit * unit, img.height() / unit * unit);
        if w == 0 || h == 0 {
            return Err(Error::TooSmall(format!(
                "{} is {}x{}, smaller than one {unit}px tile",
                path.display(),
                img.width(),
                img.height()
            )));
        }
        let hr = trim(&img, w, h)?;
        let lr = box_downsample(&hr, scale)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
        let (hr_rel, lr_rel) = (format!("hr/{name}.jpg"), format!("lr/{name}.jpg"));
        fs::write(out_dir.join(&hr_rel), encode_baseline(&hr, quality, Subsampling::S420)?)?;
        fs::write(out_dir.join(&lr_rel), encode_baseline(&lr, quality, Subsampling::S420)?)?;
        pairs.push(Pair {
            name,
            lr: lr_rel,
            hr: hr_rel,
            source_width: img.width(),
            source_height: img.height(),
            hr_width: w,
            hr_height: h,
            lr_width: lr.width(),
            lr_height: lr.height(),
        });
    }
    let manifest = Manifest { schema_version: SCHEMA_VERSION, scale, quality, subsampling: Subsampling::S420, pairs };
    manifest.save(out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_filter_rounds_means() {
        let img = RgbImage::from_fn(4, 2, |x, y| [(x + 2 * y) as u8 * 10, 255, (x % 2) as u8]).unwrap();
        let d = box_downsample(&img, 2).unwrap();
        assert_eq!((d.width(), d.height()), (2, 1));
        assert_eq!(d.pixel(0, 0), [15, 255, 1]);
        assert!(box_downsample(&img, 3).is_err());
    }
}
