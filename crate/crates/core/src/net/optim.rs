use super::model::{FreqSrModel, Gradients};
use super::tensor::Tensor4;
use crate::error::{Error, Result};

/// Mean absolute error and its subgradient `sign(pred - target) / N`, with
/// `sign(0) = 0`.
pub fn l1_loss(pred: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4)> {
    pred.check_same(target, "l1 loss")?;
    let n = pred.data().len().max(1) as f64;
    let mut grad = pred.clone();
    let mut sum = 0.0;
    for (g, &t) in grad.data_mut().iter_mut().zip(target.data()) {
        let d = *g - t;
        sum += d.abs();
        *g = if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    }
    Ok((sum / n, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update with the default hyperparameters.
pub fn adam_step(model: &mut FreqSrModel, grads: &Gradients, lr: f64) -> Result<()> {
    adam_step_with(model, grads, lr, AdamConfig::default())
}

pub fn adam_step_with(model: &mut FreqSrModel, grads: &Gradients, lr: f64, cfg: AdamConfig) -> Result<()> {
    let (params, state) = model.adam_mut();
    if grads.params.len() != params.len()
        || grads.params.iter().zip(params.iter()).any(|(g, p)| g.shape() != p.value.shape())
    {
        return Err(Error::ShapeMismatch("gradients do not match parameters".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(&grads.params).zip(&mut state.m).zip(&mut state.v) {
        let it = p.value.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
        for (((w, &g), m), v) in it {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *w -= lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
