//! 3x3, stride 1, zero-padded cross-correlation, standard and depthwise.
//!
//! Weights are `[out, in, 3, 3]` (standard) or `[channels, 1, 3, 3]`
//! (depthwise); biases are `[out]`. Each output channel (or, for the input
//! gradient, each input channel) is produced by one task with a fixed
//! summation order, so results are identical for any thread count.

use super::tensor::{Array, Tensor4};
use crate::error::{Error, Result};
use crate::par;

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Option<Tensor4>,
    pub weight: Array,
    pub bias: Array,
}

#[inline]
fn tap_offsets(t: usize) -> (isize, isize) {
    ((t / KERNEL) as isize - 1, (t % KERNEL) as isize - 1)
}

/// Valid output range along one axis of length `n` for a shift `d`.
#[inline]
fn span(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(0) as usize;
    (lo, hi.max(lo))
}

/// `out[y][x] += k * inp[y + dy][x + dx]` wherever the source is in bounds.
#[inline]
fn accumulate_tap(out: &mut [f64], inp: &[f64], h: usize, w: usize, dy: isize, dx: isize, k: f64) {
    let (y0, y1) = span(h, dy);
    let (x0, x1) = span(w, dx);
    if x0 == x1 {
        return;
    }
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let o = &mut out[y * w + x0..y * w + x1];
        let s = &inp[sy * w + (x0 as isize + dx) as usize..][..x1 - x0];
        for (a, b) in o.iter_mut().zip(s) {
            *a += k * b;
        }
    }
}

/// `sum g[y][x] * inp[y + dy][x + dx]` over in-bounds positions.
#[inline]
fn tap_dot(g: &[f64], inp: &[f64], h: usize, w: usize, dy: isize, dx: isize) -> f64 {
    let (y0, y1) = span(h, dy);
    let (x0, x1) = span(w, dx);
    let mut acc = 0.0;
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let a = &g[y * w + x0..y * w + x1];
        let s = &inp[sy * w + (x0 as isize + dx) as usize..][..x1 - x0];
        acc += a.iter().zip(s).map(|(p, q)| p * q).sum::<f64>();
    }
    acc
}

fn out_channels(x: &Tensor4, w: &Array, b: &Array, depthwise: bool) -> Result<usize> {
    let s = w.shape();
    if s.len() != 4 || s[2] != KERNEL || s[3] != KERNEL {
        return Err(Error::ShapeMismatch(format!("expected a [out, in, 3, 3] kernel, got {s:?}")));
    }
    let expect_in = if depthwise { 1 } else { x.channels() };
    if depthwise && s[0] != x.channels() || s[1] != expect_in {
        return Err(Error::ShapeMismatch(format!(
            "kernel {s:?} does not fit {} input channels{}",
            x.channels(),
            if depthwise { " (depthwise)" } else { "" }
        )));
    }
    if b.shape() != [s[0]] {
        return Err(Error::ShapeMismatch(format!("bias {:?} for {} output channels", b.shape(), s[0])));
    }
    Ok(s[0])
}

/// Convolution with padding 1; spatial dims are preserved.
pub fn conv2d(x: &Tensor4, w: &Array, b: &Array, depthwise: bool) -> Result<Tensor4> {
    let co = out_channels(x, w, b, depthwise)?;
    let (h, wd) = (x.height(), x.width());
    let hw = h * wd;
    let mut out = Tensor4::zeros(co, h, wd);
    if hw == 0 {
        return Ok(out);
    }
    let cin = x.channels();
    let (wk, bias) = (w.data(), b.data());
    par::for_each_chunk_mut(out.data_mut(), hw, |o, plane| {
        plane.fill(bias[o]);
        let inputs = if depthwise { o..o + 1 } else { 0..cin };
        for i in inputs {
            let k = if depthwise { &wk[o * TAPS..][..TAPS] } else { &wk[(o * cin + i) * TAPS..][..TAPS] };
            let src = x.channel(i);
            for (t, &kv) in k.iter().enumerate() {
                let (dy, dx) = tap_offsets(t);
                accumulate_tap(plane, src, h, wd, dy, dx, kv);
            }
        }
    });
    Ok(out)
}

/// Backward pass of [`conv2d`] given the upstream gradient `g`.
pub fn conv2d_backward(x: &Tensor4, w: &Array, g: &Tensor4, depthwise: bool) -> Result<ConvGrads> {
    conv2d_backward_impl(x, w, g, depthwise, true)
}

pub(crate) fn conv2d_backward_impl(
    x: &Tensor4,
    w: &Array,
    g: &Tensor4,
    depthwise: bool,
    need_input: bool,
) -> Result<ConvGrads> {
    let co = w.shape().first().copied().unwrap_or(0);
    out_channels(x, w, &Array::zeros(&[co]), depthwise)?;
    if g.dims() != (1, co, x.height(), x.width()) {
        return Err(Error::ShapeMismatch(format!(
            "upstream gradient {:?} for output (1, {co}, {}, {})",
            g.dims(),
            x.height(),
            x.width()
        )));
    }
    let (h, wd) = (x.height(), x.width());
    let cin = x.channels();
    let wk = w.data();

    let mut gb = Array::zeros(&[co]);
    for (o, v) in gb.data_mut().iter_mut().enumerate() {
        *v = g.channel(o).iter().sum();
    }

    let per_out = if depthwise { TAPS } else { cin * TAPS };
    let mut gw = Array::zeros(w.shape());
    if h * wd > 0 {
        par::for_each_chunk_mut(gw.data_mut(), per_out, |o, chunk| {
            let go = g.channel(o);
            for (j, k) in chunk.chunks_exact_mut(TAPS).enumerate() {
                let src = x.channel(if depthwise { o } else { j });
                for (t, kv) in k.iter_mut().enumerate() {
                    let (dy, dx) = tap_offsets(t);
                    *kv = tap_dot(go, src, h, wd, dy, dx);
                }
            }
        });
    }

    let input = if need_input {
        let mut gx = Tensor4::zeros(cin, h, wd);
        if h * wd > 0 {
            par::for_each_chunk_mut(gx.data_mut(), h * wd, |i, plane| {
                let outputs = if depthwise { i..i + 1 } else { 0..co };
                for o in outputs {
                    let k = if depthwise { &wk[o * TAPS..][..TAPS] } else { &wk[(o * cin + i) * TAPS..][..TAPS] };
                    let go = g.channel(o);
                    for (t, &kv) in k.iter().enumerate() {
                        let (dy, dx) = tap_offsets(t);
                        accumulate_tap(plane, go, h, wd, -dy, -dx, kv);
                    }
                }
            });
        }
        Some(gx)
    } else {
        None
    };
    Ok(ConvGrads { input, weight: gw, bias: gb })
}

pub fn relu(x: &Tensor4) -> Tensor4 {
    let mut y = x.clone();
    for v in y.data_mut() {
        *v = v.max(0.0);
    }
    y
}

/// Gradient through ReLU evaluated at pre-activation `a` (zero where `a <= 0`).
pub fn relu_backward(a: &Tensor4, g: &Tensor4) -> Tensor4 {
    let mut out = g.clone();
    for (v, &pre) in out.data_mut().iter_mut().zip(a.data()) {
        if pre <= 0.0 {
            *v = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor4 {
        Tensor4::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn random_array(rng: &mut ChaCha8Rng, shape: &[usize]) -> Array {
        let n = shape.iter().product();
        Array::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Six nested loops over (o, y, x, i, ky, kx).
    fn brute(x: &Tensor4, w: &Array, b: &Array, depthwise: bool) -> Tensor4 {
        let co = w.shape()[0];
        let (h, wd) = (x.height() as isize, x.width() as isize);
        Tensor4::from_fn(co, h as usize, wd as usize, |o, y, xx| {
            let mut acc = b.data()[o];
            let ins: Vec<usize> = if depthwise { vec![o] } else { (0..x.channels()).collect() };
            for (j, &i) in ins.iter().enumerate() {
                let wi = if depthwise { 0 } else { j };
                for ky in 0..3 {
                    for kx in 0..3 {
                        let sy = y as isize + ky as isize - 1;
                        let sx = xx as isize + kx as isize - 1;
                        if sy >= 0 && sy < h && sx >= 0 && sx < wd {
                            let k = w.data()[((o * w.shape()[1] + wi) * 3 + ky) * 3 + kx];
                            acc += k * x.at(i, sy as usize, sx as usize);
                        }
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn identity_depthwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, 4, 5, 7);
        let mut w = Array::zeros(&[4, 1, 3, 3]);
        for c in 0..4 {
            w.data_mut()[c * 9 + 4] = 1.0;
        }
        assert_eq!(conv2d(&x, &w, &Array::zeros(&[4]), true).unwrap(), x);
    }

    #[test]
    fn ones_kernel_on_constant() {
        let x = Tensor4::from_fn(1, 5, 5, |_, _, _| 2.0);
        let w = Array::from_vec(&[1, 1, 3, 3], vec![1.0; 9]).unwrap();
        let y = conv2d(&x, &w, &Array::zeros(&[1]), true).unwrap();
        assert_eq!(y.at(0, 2, 2), 18.0);
        assert_eq!(y.at(0, 0, 2), 12.0);
        assert_eq!(y.at(0, 0, 0), 8.0);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(ci, co, h, w, dw) in &[(3, 5, 6, 4, false), (4, 4, 1, 1, true), (2, 3, 1, 5, false), (6, 6, 7, 3, true)] {
            let x = random_tensor(&mut rng, ci, h, w);
            let shape = if dw { [co, 1, 3, 3] } else { [co, ci, 3, 3] };
            let k = random_array(&mut rng, &shape);
            let b = random_array(&mut rng, &[co]);
            let y = conv2d(&x, &k, &b, dw).unwrap();
            let r = brute(&x, &k, &b, dw);
            for (a, b) in y.data().iter().zip(r.data()) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn backward_is_adjoint() {
        // <g, conv(x)> without bias is linear in both x and w, so the
        // gradients must satisfy <g, conv(x)> = <gx, x> = <gw, w>.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dw in [false, true] {
            let x = random_tensor(&mut rng, 3, 5, 6);
            let k = random_array(&mut rng, if dw { &[3, 1, 3, 3] } else { &[4, 3, 3, 3] });
            let co = k.shape()[0];
            let y = conv2d(&x, &k, &Array::zeros(&[co]), dw).unwrap();
            let g = random_tensor(&mut rng, co, 5, 6);
            let lhs: f64 = y.data().iter().zip(g.data()).map(|(a, b)| a * b).sum();
            let grads = conv2d_backward(&x, &k, &g, dw).unwrap();
            let gx: f64 = grads.input.unwrap().data().iter().zip(x.data()).map(|(a, b)| a * b).sum();
            let gw: f64 = grads.weight.data().iter().zip(k.data()).map(|(a, b)| a * b).sum();
            assert!((lhs - gx).abs() < 1e-10 && (lhs - gw).abs() < 1e-10);
            let gb: f64 = g.data().iter().sum();
            assert!((grads.bias.data().iter().sum::<f64>() - gb).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_errors() {
        let x = Tensor4::zeros(3, 4, 4);
        assert!(conv2d(&x, &Array::zeros(&[2, 2, 3, 3]), &Array::zeros(&[2]), false).is_err());
        assert!(conv2d(&x, &Array::zeros(&[2, 3, 3, 3]), &Array::zeros(&[3]), false).is_err());
        assert!(conv2d(&x, &Array::zeros(&[2, 1, 3, 3]), &Array::zeros(&[2]), true).is_err());
        assert!(conv2d(&x, &Array::zeros(&[3, 3, 5, 5]), &Array::zeros(&[3]), false).is_err());
        let g = Tensor4::zeros(2, 4, 4);
        assert!(conv2d_backward(&x, &Array::zeros(&[3, 3, 3, 3]), &g, false).is_err());
    }
}
