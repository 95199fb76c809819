//! Procedural test images: smooth gradients, oriented waves, hard-edged
//! shapes and a little grain, so that JPEG coding sees both flat and busy
//! blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::RgbImage;
use crate::error::Result;

struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: [f64; 3],
}

enum Shape {
    Disc { cx: f64, cy: f64, r: f64, rgb: [f64; 3] },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64, rgb: [f64; 3] },
}

/// A seeded synthetic "photo" of the given size.
pub fn test_card(width: usize, height: usize, seed: u64) -> Result<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let corner: [[f64; 3]; 2] = [
        std::array::from_fn(|_| rng.gen_range(40.0..215.0)),
        std::array::from_fn(|_| rng.gen_range(40.0..215.0)),
    ];
    let waves: Vec<Wave> = (0..6)
        .map(|_| {
            let period = rng.gen_range(6.0..w.max(h).max(8.0));
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let k = std::f64::consts::TAU / period;
            Wave {
                fx: k * theta.cos(),
                fy: k * theta.sin(),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                amp: std::array::from_fn(|_| rng.gen_range(-18.0..18.0)),
            }
        })
        .collect();
    let shapes: Vec<Shape> = (0..8)
        .map(|_| {
            let rgb = std::array::from_fn(|_| rng.gen_range(0.0..255.0));
            if rng.gen_bool(0.5) {
                Shape::Disc {
                    cx: rng.gen_range(0.0..w),
                    cy: rng.gen_range(0.0..h),
                    r: rng.gen_range(2.0..(w.min(h) / 4.0).max(3.0)),
                    rgb,
                }
            } else {
                let (x0, y0) = (rng.gen_range(0.0..w), rng.gen_range(0.0..h));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.gen_range(2.0..(w / 3.0).max(3.0)),
                    y1: y0 + rng.gen_range(2.0..(h / 3.0).max(3.0)),
                    rgb,
                }
            }
        })
        .collect();
    let grain = rng.gen_range(0.0..6.0);
    let grain_seed: u64 = rng.gen();

    RgbImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let t = (fx / w + fy / h) / 2.0;
        let mut px: [f64; 3] = std::array::from_fn(|c| corner[0][c] * (1.0 - t) + corner[1][c] * t);
        for wv in &waves {
            let s = (wv.fx * fx + wv.fy * fy + wv.phase).sin();
            for (p, a) in px.iter_mut().zip(wv.amp) {
                *p += a * s;
            }
        }
        for shape in &shapes {
            let (inside, rgb) = match shape {
                Shape::Disc { cx, cy, r, rgb } => ((fx - cx).powi(2) + (fy - cy).powi(2) <= r * r, rgb),
                Shape::Rect { x0, y0, x1, y1, rgb } => (fx >= *x0 && fx < *x1 && fy >= *y0 && fy < *y1, rgb),
            };
            if inside {
                for c in 0..3 {
                    px[c] = 0.35 * px[c] + 0.65 * rgb[c];
                }
            }
        }
        let n = hash(grain_seed ^ ((y as u64) << 32 | x as u64));
        let g = grain * ((n & 0xffff) as f64 / 65535.0 - 0.5) * 2.0;
        std::array::from_fn(|c| (px[c] + g).round().clamp(0.0, 255.0) as u8)
    })
}

/// Left-to-right ramp in all channels plus a vertical ramp in blue.
pub fn gradient_card(width: usize, height: usize) -> Result<RgbImage> {
    RgbImage::from_fn(width, height, |x, y| {
        let gx = (x * 255 / width.max(2).saturating_sub(1).max(1)).min(255) as u8;
        let gy = (y * 255 / height.max(2).saturating_sub(1).max(1)).min(255) as u8;
        [gx, 255 - gx, gy]
    })
}

fn hash(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
