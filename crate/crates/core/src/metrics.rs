//! Image-quality metrics and timing helpers.
//!
//! PSNR and SSIM default to the BT.601 luma of both images; [`Mode::Rgb`]
//! averages over the three colour channels instead.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::blocks::{Plane, RgbImage};
use crate::error::{Error, Result};
use crate::spatial::luma;

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Which samples the metrics compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Y,
    Rgb,
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{}x{} vs {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

fn psnr_samples(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>, max_val: f64) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in a.zip(b) {
        sum += (x - y) * (x - y);
        n += 1;
    }
    if sum == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (max_val * max_val / (sum / n as f64)).log10()
}

/// PSNR in dB over all samples of two planes; `+inf` when identical.
pub fn psnr_plane(a: &Plane, b: &Plane, max_val: f64) -> Result<f64> {
    check_dims((a.width(), a.height()), (b.width(), b.height()))?;
    Ok(psnr_samples(a.data().iter().copied(), b.data().iter().copied(), max_val))
}

/// PSNR in dB over all interleaved samples, peak 255.
pub fn psnr_rgb(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_dims((a.width(), a.height()), (b.width(), b.height()))?;
    Ok(psnr_samples(
        a.data().iter().map(|&v| v as f64),
        b.data().iter().map(|&v| v as f64),
        255.0,
    ))
}

pub fn psnr(a: &RgbImage, b: &RgbImage, mode: Mode) -> Result<f64> {
    match mode {
        Mode::Y => psnr_plane(&luma(a), &luma(b), 255.0),
        Mode::Rgb => psnr_rgb(a, b),
    }
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut g: [f64; SSIM_WINDOW] = std::array::from_fn(|i| {
        let d = i as f64 - c;
        (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable valid-region filtering with the SSIM window.
fn filter_valid(data: &[f64], w: usize, h: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = g.iter().zip(&src[x..x + SSIM_WINDOW]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (k, gk) in g.iter().enumerate() {
            let src = &rows[(y + k) * ow..(y + k + 1) * ow];
            for (o, v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += gk * v;
            }
        }
    }
    out
}

/// Mean SSIM (Gaussian 11x11 window, sigma 1.5, valid region) of two planes
/// on the 0..255 scale.
pub fn ssim_plane(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims((a.width(), a.height()), (b.width(), b.height()))?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall(format!("SSIM needs at least 11x11 samples, got {w}x{h}")));
    }
    let g = gaussian_window();
    let (x, y) = (a.data(), b.data());
    let sq = |f: &dyn Fn(usize) -> f64| (0..x.len()).map(f).collect::<Vec<f64>>();
    let mu_x = filter_valid(x, w, h, &g);
    let mu_y = filter_valid(y, w, h, &g);
    let xx = filter_valid(&sq(&|i| x[i] * x[i]), w, h, &g);
    let yy = filter_valid(&sq(&|i| y[i] * y[i]), w, h, &g);
    let xy = filter_valid(&sq(&|i| x[i] * y[i]), w, h, &g);
    let (c1, c2) = ((K1 * 255.0).powi(2), (K2 * 255.0).powi(2));
    let mut sum = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = xx[i] - mx * mx;
        let vy = yy[i] - my * my;
        let cov = xy[i] - mx * my;
        sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(sum / mu_x.len() as f64)
}

fn channel(img: &RgbImage, c: usize) -> Plane {
    let data = img.data().iter().skip(c).step_by(3).map(|&v| v as f64).collect();
    Plane::new(img.width(), img.height(), data).expect("same dims")
}

pub fn ssim(a: &RgbImage, b: &RgbImage, mode: Mode) -> Result<f64> {
    match mode {
        Mode::Y => ssim_plane(&luma(a), &luma(b)),
        Mode::Rgb => {
            check_dims((a.width(), a.height()), (b.width(), b.height()))?;
            let mut s = 0.0;
            for c in 0..3 {
                s += ssim_plane(&channel(a, c), &channel(b, c))?;
            }
            Ok(s / 3.0)
        }
    }
}

/// Top-left corner of a centred `size`-pixel crop, rounding down.
pub fn crop_origin_px(width: usize, height: usize, size: usize) -> Result<(usize, usize)> {
    if size == 0 || size > width || size > height {
        return Err(Error::TooSmall(format!("cannot take a {size}px crop from {width}x{height}")));
    }
    Ok(((width - size) / 2, (height - size) / 2))
}

/// Centred `size x size` pixel crop.
pub fn center_crop_px(img: &RgbImage, size: usize) -> Result<RgbImage> {
    let (x0, y0) = crop_origin_px(img.width(), img.height(), size)?;
    let mut data = Vec::with_capacity(size * size * 3);
    for y in y0..y0 + size {
        let start = (y * img.width() + x0) * 3;
        data.extend_from_slice(&img.data()[start..start + size * 3]);
    }
    RgbImage::new(size, size, data)
}

/// Monotonic timer.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch { start: Instant::now() }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    /// Runs `f`, returning its result and how long it took.
    pub fn time<R>(f: impl FnOnce() -> R) -> (R, Duration) {
        let sw = Stopwatch::start();
        let r = f();
        (r, sw.elapsed())
    }
}

/// Frames per second; errors when no time has elapsed.
pub fn fps(frames: usize, elapsed: Duration) -> Result<f64> {
    let s = elapsed.as_secs_f64();
    if s <= 0.0 {
        return Err(Error::InvalidArgument("cannot compute FPS over zero elapsed time".into()));
    }
    Ok(frames as f64 / s)
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Summary of a latency sample, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    /// Nearest-rank 95th percentile.
    pub p95_ms: f64,
    pub samples: usize,
}

impl LatencyStats {
    pub fn from_durations(d: &[Duration]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidArgument("no timing samples".into()));
        }
        let mut ms: Vec<f64> = d.iter().map(|x| x.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let median = if n % 2 == 1 { ms[n / 2] } else { 0.5 * (ms[n / 2 - 1] + ms[n / 2]) };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Ok(LatencyStats { mean_ms: mean(&ms).expect("non-empty"), median_ms: median, p95_ms: ms[rank - 1], samples: n })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        let a = Plane::filled(10, 10, 0.0).unwrap();
        assert_eq!(psnr_plane(&a, &a, 255.0).unwrap(), f64::INFINITY);
        let b = Plane::filled(10, 10, 255.0).unwrap();
        assert_eq!(psnr_plane(&a, &b, 255.0).unwrap(), 0.0);
        let mut c = a.clone();
        c.data_mut()[37] = 255.0;
        assert!((psnr_plane(&a, &c, 255.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(psnr_plane(&a, &Plane::filled(9, 10, 0.0).unwrap(), 255.0).is_err());
    }

    #[test]
    fn crop_rounds_down() {
        assert_eq!(crop_origin_px(225, 221, 220).unwrap(), (2, 0));
        let img = RgbImage::from_fn(5, 4, |x, y| [x as u8, y as u8, 0]).unwrap();
        let c = center_crop_px(&img, 3).unwrap();
        assert_eq!(c.pixel(0, 0), [1, 0, 0]);
        assert_eq!(center_crop_px(&img, 4).unwrap().pixel(0, 0), [0, 0, 0]);
        assert!(center_crop_px(&img, 5).is_err());
    }

    #[test]
    fn fps_and_stats() {
        assert_eq!(fps(100, Duration::from_secs(4)).unwrap(), 25.0);
        assert!(fps(1, Duration::ZERO).is_err());
        let d: Vec<Duration> = (1..=20).map(Duration::from_millis).collect();
        let s = LatencyStats::from_durations(&d).unwrap();
        assert!((s.mean_ms - 10.5).abs() < 1e-9 && (s.median_ms - 10.5).abs() < 1e-9);
        assert!((s.p95_ms - 19.0).abs() < 1e-9);
    }

    #[test]
    fn nested_scopes() {
        let outer = Stopwatch::start();
        let (_, a) = Stopwatch::time(|| std::thread::sleep(Duration::from_millis(2)));
        let (_, b) = Stopwatch::time(|| std::thread::sleep(Duration::from_millis(2)));
        assert!(a + b <= outer.elapsed());
    }
}
