//! Central finite-difference gradient oracle for the network.

#![allow(dead_code)]

use freqsr::net::{conv2d, conv2d_backward, relu, relu_backward, Array, FreqSrModel, Tensor4};

pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates skipped because a ReLU changed state within +-eps.
    pub kinks: usize,
}

fn relative(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-10 {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

/// Loss is the linear probe `<probe, forward(x)>`, whose output gradient is
/// `probe` itself.
fn probe_loss(model: &FreqSrModel, x: &Tensor4, probe: &Tensor4) -> (f64, Vec<bool>) {
    let (y, trace) = model.forward_traced(x).unwrap();
    let loss = y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum();
    let pattern = trace.pre_activations().flat_map(|a| a.data().iter().map(|&v| v > 0.0)).collect();
    (loss, pattern)
}

/// Checks every parameter and every `input_stride`-th input coordinate.
pub fn check(model: &FreqSrModel, x: &Tensor4, probe: &Tensor4, eps: f64, input_stride: usize) -> GradCheck {
    let (_, trace) = model.forward_traced(x).unwrap();
    let grads = model.backward(&trace, probe, true).unwrap();
    let mut out = GradCheck { max_rel_err: 0.0, checked: 0, kinks: 0 };
    let mut record = |analytic: f64, plus: (f64, Vec<bool>), minus: (f64, Vec<bool>)| {
        if plus.1 != minus.1 {
            out.kinks += 1;
            return;
        }
        let numeric = (plus.0 - minus.0) / (2.0 * eps);
        out.max_rel_err = out.max_rel_err.max(relative(analytic, numeric));
        out.checked += 1;
    };
    let mut m = model.clone();
    for p in 0..m.params().len() {
        for i in 0..m.params()[p].value.len() {
            let w0 = m.params()[p].value.data()[i];
            m.params_mut()[p].value.data_mut()[i] = w0 + eps;
            let plus = probe_loss(&m, x, probe);
            m.params_mut()[p].value.data_mut()[i] = w0 - eps;
            let minus = probe_loss(&m, x, probe);
            m.params_mut()[p].value.data_mut()[i] = w0;
            record(grads.params[p].data()[i], plus, minus);
        }
    }
    let gx = grads.input.unwrap();
    let mut xp = x.clone();
    for i in (0..x.data().len()).step_by(input_stride.max(1)) {
        let v = x.data()[i];
        xp.data_mut()[i] = v + eps;
        let plus = probe_loss(model, &xp, probe);
        xp.data_mut()[i] = v - eps;
        let minus = probe_loss(model, &xp, probe);
        xp.data_mut()[i] = v;
        record(gx.data()[i], plus, minus);
    }
    out
}

fn dot(a: &Tensor4, b: &Tensor4) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Finite-difference check of a single convolution layer against
/// `conv2d_backward`, over every weight, bias and input coordinate.
pub fn check_conv(x: &Tensor4, w: &Array, b: &Array, probe: &Tensor4, depthwise: bool, eps: f64) -> f64 {
    let loss = |x: &Tensor4, w: &Array, b: &Array| dot(&conv2d(x, w, b, depthwise).unwrap(), probe);
    let g = conv2d_backward(x, w, probe, depthwise).unwrap();
    let mut worst: f64 = 0.0;
    let (mut wp, mut bp, mut xp) = (w.clone(), b.clone(), x.clone());
    for i in 0..w.len() {
        let v = w.data()[i];
        wp.data_mut()[i] = v + eps;
        let plus = loss(x, &wp, b);
        wp.data_mut()[i] = v - eps;
        let minus = loss(x, &wp, b);
        wp.data_mut()[i] = v;
        worst = worst.max(relative(g.weight.data()[i], (plus - minus) / (2.0 * eps)));
    }
    for i in 0..b.len() {
        let v = b.data()[i];
        bp.data_mut()[i] = v + eps;
        let plus = loss(x, w, &bp);
        bp.data_mut()[i] = v - eps;
        let minus = loss(x, w, &bp);
        bp.data_mut()[i] = v;
        worst = worst.max(relative(g.bias.data()[i], (plus - minus) / (2.0 * eps)));
    }
    let gx = g.input.unwrap();
    for i in 0..x.data().len() {
        let v = x.data()[i];
        xp.data_mut()[i] = v + eps;
        let plus = loss(&xp, w, b);
        xp.data_mut()[i] = v - eps;
        let minus = loss(&xp, w, b);
        xp.data_mut()[i] = v;
        worst = worst.max(relative(gx.data()[i], (plus - minus) / (2.0 * eps)));
    }
    worst
}

/// Finite-difference check of the ReLU layer; coordinates within `eps` of
/// the kink are skipped.
pub fn check_relu(x: &Tensor4, probe: &Tensor4, eps: f64) -> f64 {
    let g = relu_backward(x, probe);
    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for i in 0..x.data().len() {
        let v = x.data()[i];
        if v.abs() <= eps {
            continue;
        }
        xp.data_mut()[i] = v + eps;
        let plus = dot(&relu(&xp), probe);
        xp.data_mut()[i] = v - eps;
        let minus = dot(&relu(&xp), probe);
        xp.data_mut()[i] = v;
        worst = worst.max(relative(g.data()[i], (plus - minus) / (2.0 * eps)));
    }
    worst
}
