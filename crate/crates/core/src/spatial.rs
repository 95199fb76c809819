//! Spatial-domain reference math: 8- and 16-point DCTs, colour conversion,
//! chroma upsampling and pixel reconstruction from coefficient planes.
//!
//! Transforms use the orthonormal DCT-II with JPEG scaling,
//! `F(u,v) = (2/N) C(u) C(v) sum f(x,y) cos((2x+1)u pi/2N) cos((2y+1)v pi/2N)`,
//! `C(0) = 1/sqrt(2)`, evaluated in double precision.

use std::sync::OnceLock;

use crate::blocks::{Block, Chroma, DctImage, DctPlane, Plane, RgbImage, Subsampling, BLOCK_LEN};
use crate::error::{Error, Result};
use crate::freq;
use crate::par;

/// Row `u` holds basis vector `u`: `sqrt(2/N) C(u) cos((2x+1) u pi / 2N)`.
struct Basis<const N: usize>([[f64; N]; N]);

impl<const N: usize> Basis<N> {
    fn new() -> Self {
        let n = N as f64;
        let mut m = [[0.0; N]; N];
        for (u, row) in m.iter_mut().enumerate() {
            let c = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
            for (x, v) in row.iter_mut().enumerate() {
                let angle = ((2 * x + 1) * u) as f64 * std::f64::consts::PI / (2.0 * n);
                *v = (2.0 / n).sqrt() * c * angle.cos();
            }
        }
        Basis(m)
    }

    /// out = B * X * B^T
    fn forward(&self, input: &[f64], out: &mut [f64]) {
        let b = &self.0;
        let mut tmp = [[0.0; N]; N];
        for u in 0..N {
            for y in 0..N {
                let mut acc = 0.0;
                for x in 0..N {
                    acc += b[u][x] * input[x * N + y];
                }
                tmp[u][y] = acc;
            }
        }
        for u in 0..N {
            for v in 0..N {
                let mut acc = 0.0;
                for y in 0..N {
                    acc += tmp[u][y] * b[v][y];
                }
                out[u * N + v] = acc;
            }
        }
    }

    /// out = B^T * X * B
    fn inverse(&self, input: &[f64], out: &mut [f64]) {
        let b = &self.0;
        let mut tmp = [[0.0; N]; N];
        for x in 0..N {
            for v in 0..N {
                let mut acc = 0.0;
                for u in 0..N {
                    acc += b[u][x] * input[u * N + v];
                }
                tmp[x][v] = acc;
            }
        }
        for x in 0..N {
            for y in 0..N {
                let mut acc = 0.0;
                for v in 0..N {
                    acc += tmp[x][v] * b[v][y];
                }
                out[x * N + y] = acc;
            }
        }
    }
}

fn basis8() -> &'static Basis<8> {
    static B: OnceLock<Basis<8>> = OnceLock::new();
    B.get_or_init(Basis::new)
}

fn basis16() -> &'static Basis<16> {
    static B: OnceLock<Basis<16>> = OnceLock::new();
    B.get_or_init(Basis::new)
}

/// 8x8 basis matrix, row `u` = frequency `u`.
pub(crate) fn dct8_matrix() -> &'static [[f64; 8]; 8] {
    &basis8().0
}

pub(crate) fn dct16_matrix() -> &'static [[f64; 16]; 16] {
    &basis16().0
}

pub fn fdct8(samples: &Block) -> Block {
    let mut out = [0.0; BLOCK_LEN];
    basis8().forward(samples, &mut out);
    out
}

/// Inverse 8x8 DCT; output is pre-level-shift (centred on zero).
pub fn idct8(coeffs: &Block) -> Block {
    let mut out = [0.0; BLOCK_LEN];
    basis8().inverse(coeffs, &mut out);
    out
}

pub fn fdct16(samples: &[f64; 256]) -> [f64; 256] {
    let mut out = [0.0; 256];
    basis16().forward(samples, &mut out);
    out
}

pub fn idct16(coeffs: &[f64; 256]) -> [f64; 256] {
    let mut out = [0.0; 256];
    basis16().inverse(coeffs, &mut out);
    out
}

/// JFIF full-range conversion. Planes must share dimensions.
pub fn ycbcr_to_rgb(y: &Plane, cb: &Plane, cr: &Plane) -> Result<RgbImage> {
    let (w, h) = (y.width(), y.height());
    for p in [cb, cr] {
        if p.width() != w || p.height() != h {
            return Err(Error::DimensionMismatch(format!(
                "plane {}x{} vs luma {w}x{h}",
                p.width(),
                p.height()
            )));
        }
    }
    let mut data = Vec::with_capacity(w * h * 3);
    for ((&y, &cb), &cr) in y.data().iter().zip(cb.data()).zip(cr.data()) {
        data.extend_from_slice(&ycbcr_pixel(y, cb, cr));
    }
    RgbImage::new(w, h, data)
}

#[inline]
fn ycbcr_pixel(y: f64, cb: f64, cr: f64) -> [u8; 3] {
    let cb = cb - 128.0;
    let cr = cr - 128.0;
    [
        to_u8(y + 1.402 * cr),
        to_u8(y - 0.344136 * cb - 0.714136 * cr),
        to_u8(y + 1.772 * cb),
    ]
}

/// Rounds half away from zero, then clamps to `[0, 255]`.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Forward BT.601 full-range conversion, unrounded.
pub fn rgb_to_ycbcr(img: &RgbImage) -> (Plane, Plane, Plane) {
    let n = img.width() * img.height();
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for px in img.data().chunks_exact(3) {
        let (r, g, b) = (px[0] as f64, px[1] as f64, px[2] as f64);
        y.push(0.299 * r + 0.587 * g + 0.114 * b);
        cb.push(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
        cr.push(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
    }
    let mk = |d| Plane::new(img.width(), img.height(), d).expect("same dims");
    (mk(y), mk(cb), mk(cr))
}

/// BT.601 luma of an RGB image.
pub fn luma(img: &RgbImage) -> Plane {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
        .collect();
    Plane::new(img.width(), img.height(), data).expect("same dims")
}

/// Inverse-transforms every block and adds the +128 level shift.
/// The result spans the full padded grid.
pub fn plane_to_spatial(plane: &DctPlane) -> Plane {
    let (rows, cols) = (plane.rows(), plane.cols());
    let width = cols * 8;
    let mut data = vec![0.0; width * rows * 8];
    par::for_each_chunk_mut(&mut data, width * 8, |r, strip| {
        for c in 0..cols {
            let px = idct8(plane.block(r, c));
            for y in 0..8 {
                let row = &mut strip[y * width + c * 8..y * width + c * 8 + 8];
                for x in 0..8 {
                    row[x] = px[y * 8 + x] + 128.0;
                }
            }
        }
    });
    Plane::new(width, rows * 8, data).expect("grid dims")
}

/// Level-shifts by -128 and forward-transforms into blocks. The plane is
/// padded to whole blocks by edge replication.
pub fn spatial_to_plane(plane: &Plane) -> DctPlane {
    let rows = plane.height().div_ceil(8);
    let cols = plane.width().div_ceil(8);
    let blocks = par::map_range(rows * cols, |i| {
        let (r, c) = (i / cols, i % cols);
        let mut px = [0.0; BLOCK_LEN];
        for y in 0..8 {
            let sy = (r * 8 + y).min(plane.height() - 1);
            for x in 0..8 {
                let sx = (c * 8 + x).min(plane.width() - 1);
                px[y * 8 + x] = plane.at(sx, sy) - 128.0;
            }
        }
        fdct8(&px)
    });
    DctPlane::from_blocks(rows, cols, blocks).expect("non-empty plane")
}

/// DCT-domain interpolation of a spatial plane by 2 or 4.
///
/// The plane is split into 8x8 tiles (edge-replicated to whole tiles), each
/// tile is forward-transformed, enlarged with [`freq::upsample_dct_x2`]
/// (twice for factor 4) and inverse-transformed. Output is `factor` times the
/// input size.
pub fn chroma_upsample(plane: &Plane, factor: usize) -> Result<Plane> {
    let steps = upsample_steps(factor)?;
    let mut blocks = spatial_to_plane(plane);
    for _ in 0..steps {
        blocks = freq::upsample_dct_x2(&blocks);
    }
    plane_to_spatial(&blocks).trimmed(plane.width() * factor, plane.height() * factor)
}

fn upsample_steps(factor: usize) -> Result<usize> {
    match factor {
        2 => Ok(1),
        4 => Ok(2),
        f => Err(Error::InvalidArgument(format!("upsampling factor must be 2 or 4, got {f}"))),
    }
}

/// Triangle-filter 2x chroma upsampling (weights 3/4, 1/4 per axis) over the
/// `valid_w x valid_h` region of `plane`, with edge replication at the valid
/// border. Produces a `out_w x out_h` plane. Expects integer samples and
/// rounds like common 8-bit decoders (bias 8 on even columns, 7 on odd).
pub fn chroma_upsample_triangle(
    plane: &Plane,
    valid_w: usize,
    valid_h: usize,
    out_w: usize,
    out_h: usize,
) -> Plane {
    let near = |i: usize, odd: bool, n: usize| -> usize {
        if odd {
            (i + 1).min(n - 1)
        } else {
            i.saturating_sub(1)
        }
    };
    let cols: Vec<(usize, usize, f64)> = (0..out_w)
        .map(|x| {
            let i = (x / 2).min(valid_w - 1);
            (i, near(i, x % 2 == 1, valid_w), if x % 2 == 0 { 8.0 } else { 7.0 })
        })
        .collect();
    let pw = plane.width();
    let src = plane.data();
    let mut data = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let j = (y / 2).min(valid_h - 1);
        let j2 = near(j, y % 2 == 1, valid_h);
        let (near_row, far_row) = (&src[j * pw..(j + 1) * pw], &src[j2 * pw..(j2 + 1) * pw]);
        data.extend(cols.iter().map(|&(i, i2, bias)| {
            let this = 3.0 * near_row[i] + far_row[i];
            let other = 3.0 * near_row[i2] + far_row[i2];
            ((3.0 * this + other + bias) / 16.0).floor()
        }));
    }
    Plane::new(out_w, out_h, data).expect("output dims")
}

/// Full pixel reconstruction: inverse DCT of every plane, chroma upsampling
/// to luma resolution and colour conversion, trimmed to the true size.
/// Subsampled chroma is rounded to 8-bit samples before the triangle filter;
/// everything else stays in floating point until the final rounding.
/// Grayscale images are returned with R = G = B.
pub fn reconstruct_rgb(img: &DctImage) -> Result<RgbImage> {
    let (w, h) = (img.width, img.height);
    let y = plane_to_spatial(&img.y);
    let Some(Chroma { cb, cr }) = &img.chroma else {
        let mut data = Vec::with_capacity(w * h * 3);
        for row in 0..h {
            for col in 0..w {
                let v = to_u8(y.at(col, row));
                data.extend_from_slice(&[v, v, v]);
            }
        }
        return RgbImage::new(w, h, data);
    };
    let y = y.trimmed(w, h)?;
    let (cb, cr) = (plane_to_spatial(cb), plane_to_spatial(cr));
    let (cb, cr) = match img.subsampling {
        Subsampling::S444 => (cb.trimmed(w, h)?, cr.trimmed(w, h)?),
        Subsampling::S420 => {
            let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
            (
                chroma_upsample_triangle(&samples8(cb), cw, ch, w, h),
                chroma_upsample_triangle(&samples8(cr), cw, ch, w, h),
            )
        }
    };
    ycbcr_to_rgb(&y, &cb, &cr)
}

fn samples8(mut p: Plane) -> Plane {
    for v in p.data_mut() {
        *v = to_u8(*v) as f64;
    }
    p
}

/// Pixel reconstruction after 2x super-resolution: `y_hr` is the enlarged
/// luma plane, chroma is enlarged in the DCT domain to match it, and the
/// output is trimmed to twice the source size.
pub fn reconstruct_upscaled(
    y_hr: &DctPlane,
    chroma: &Chroma,
    subsampling: Subsampling,
    src_width: usize,
    src_height: usize,
) -> Result<RgbImage> {
    let (w, h) = (src_width * 2, src_height * 2);
    let factor = 2 * subsampling.chroma_factor();
    let steps = upsample_steps(factor)?;
    let enlarge = |p: &DctPlane| {
        let mut p = p.clone();
        for _ in 0..steps {
            p = freq::upsample_dct_x2(&p);
        }
        plane_to_spatial(&p).trimmed(w, h)
    };
    let y = plane_to_spatial(y_hr).trimmed(w, h)?;
    ycbcr_to_rgb(&y, &enlarge(&chroma.cb)?, &enlarge(&chroma.cr)?)
}
