//! Independent spatial bicubic 2x upscaler (Keys kernel, a = -0.5) with
//! half-pixel-centre alignment and clamped edges.

#![allow(dead_code)]

use freqsr::blocks::RgbImage;

fn keys(t: f64) -> f64 {
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (a + 2.0) * t.powi(3) - (a + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        a * t.powi(3) - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

/// Source taps and weights for output coordinate `o` at 2x.
fn taps(o: usize, n: usize) -> [(usize, f64); 4] {
    let s = (o as f64 + 0.5) / 2.0 - 0.5;
    let base = s.floor() as isize;
    std::array::from_fn(|k| {
        let i = base - 1 + k as isize;
        (i.clamp(0, n as isize - 1) as usize, keys(s - i as f64))
    })
}

pub fn upscale2(img: &RgbImage) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    RgbImage::from_fn(2 * w, 2 * h, |x, y| {
        let (tx, ty) = (taps(x, w), taps(y, h));
        let mut acc = [0.0; 3];
        for &(sy, wy) in &ty {
            for &(sx, wx) in &tx {
                let p = img.pixel(sx, sy);
                for c in 0..3 {
                    acc[c] += wy * wx * p[c] as f64;
                }
            }
        }
        acc.map(|v| v.round().clamp(0.0, 255.0) as u8)
    })
    .unwrap()
}
