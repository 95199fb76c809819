use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{conv2d, conv2d_backward_impl, relu, relu_backward, KERNEL};
use super::tensor::{Array, Tensor4};
use crate::blocks::BLOCK_LEN;
use crate::error::{Error, Result};

/// Input and output channels: one per DCT frequency.
pub const CHANNELS: usize = BLOCK_LEN;

/// Architecture hyperparameters. Kernels are always 3x3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqSrConfig {
    /// Feature width `F` between head and tail.
    pub features: usize,
    pub depthwise_blocks: usize,
    pub standard_blocks: usize,
}

impl Default for FreqSrConfig {
    fn default() -> Self {
        FreqSrConfig { features: 64, depthwise_blocks: 4, standard_blocks: 4 }
    }
}

impl FreqSrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.features == 0 {
            return Err(Error::InvalidArgument("feature width must be at least 1".into()));
        }
        Ok(())
    }

    /// Trainable parameter count:
    /// `64*F*9 + F` (head) + `nd * 2 * (9F + F)` (depthwise blocks)
    /// + `ns * 2 * (9F^2 + F)` (standard blocks) + `F*64*9 + 64` (tail).
    pub fn param_count(&self) -> usize {
        let f = self.features;
        let k = KERNEL * KERNEL;
        let head = CHANNELS * f * k + f;
        let dw = self.depthwise_blocks * 2 * (k * f + f);
        let std = self.standard_blocks * 2 * (k * f * f + f);
        let tail = f * CHANNELS * k + CHANNELS;
        head + dw + std + tail
    }

    fn layers(&self) -> Vec<LayerSpec> {
        let f = self.features;
        let mut v = vec![LayerSpec { name: "head".into(), cin: CHANNELS, cout: f, depthwise: false }];
        for i in 0..self.depthwise_blocks {
            for j in 1..=2 {
                v.push(LayerSpec { name: format!("dw{i}.conv{j}"), cin: f, cout: f, depthwise: true });
            }
        }
        for i in 0..self.standard_blocks {
            for j in 1..=2 {
                v.push(LayerSpec { name: format!("res{i}.conv{j}"), cin: f, cout: f, depthwise: false });
            }
        }
        v.push(LayerSpec { name: "tail".into(), cin: f, cout: CHANNELS, depthwise: false });
        v
    }
}

struct LayerSpec {
    name: String,
    cin: usize,
    cout: usize,
    depthwise: bool,
}

impl LayerSpec {
    fn weight_shape(&self) -> [usize; 4] {
        [self.cout, if self.depthwise { 1 } else { self.cin }, KERNEL, KERNEL]
    }

    fn fan_in(&self) -> usize {
        self.weight_shape()[1] * KERNEL * KERNEL
    }
}

/// A named trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Array,
}

/// Adam moments aligned with the model's parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Array>,
    pub v: Vec<Array>,
}

/// y = x + conv2(relu(conv1(x))); both convs depthwise or both standard.
pub fn residual_block(x: &Tensor4, w1: &Array, b1: &Array, w2: &Array, b2: &Array, depthwise: bool) -> Result<Tensor4> {
    let a = conv2d(x, w1, b1, depthwise)?;
    let mut y = conv2d(&relu(&a), w2, b2, depthwise)?;
    x.check_same(&y, "residual add")?;
    y.add_assign(x);
    Ok(y)
}

/// Intermediate activations kept by [`FreqSrModel::forward_traced`].
#[derive(Debug, Clone)]
pub struct Trace {
    input: Tensor4,
    /// Per residual block: block input and first-conv pre-activation.
    blocks: Vec<(Tensor4, Tensor4)>,
    /// Input of the tail conv.
    last: Tensor4,
}

impl Trace {
    /// First-conv pre-activations of every residual block, in order.
    pub fn pre_activations(&self) -> impl Iterator<Item = &Tensor4> {
        self.blocks.iter().map(|(_, a)| a)
    }
}

/// Gradients aligned with [`FreqSrModel::params`], plus the input gradient
/// when requested.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: Vec<Array>,
    pub input: Option<Tensor4>,
}

/// The frequency-domain super-resolution network with its optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqSrModel {
    config: FreqSrConfig,
    params: Vec<Param>,
    depthwise: Vec<bool>,
    adam: AdamState,
}

impl FreqSrModel {
    /// Kaiming-uniform (fan-in, ReLU gain) weights, zero biases, seeded.
    pub fn new(config: FreqSrConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(config, |spec, w| {
            let bound = (6.0 / spec.fan_in() as f64).sqrt();
            for v in w.data_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        })
    }

    pub fn zeros(config: FreqSrConfig) -> Result<Self> {
        Self::init(config, |_, _| {})
    }

    fn init(config: FreqSrConfig, mut fill: impl FnMut(&LayerSpec, &mut Array)) -> Result<Self> {
        config.validate()?;
        let mut params = Vec::new();
        let mut depthwise = Vec::new();
        for spec in config.layers() {
            let mut w = Array::zeros(&spec.weight_shape());
            fill(&spec, &mut w);
            params.push(Param { name: format!("{}.weight", spec.name), value: w });
            params.push(Param { name: format!("{}.bias", spec.name), value: Array::zeros(&[spec.cout]) });
            depthwise.push(spec.depthwise);
        }
        let adam = AdamState {
            step: 0,
            m: params.iter().map(|p| Array::zeros(p.value.shape())).collect(),
            v: params.iter().map(|p| Array::zeros(p.value.shape())).collect(),
        };
        Ok(FreqSrModel { config, params, depthwise, adam })
    }

    /// Rebuilds a model from named tensors, checking names and shapes
    /// against `config`.
    pub fn from_parts(config: FreqSrConfig, params: Vec<Param>, adam: Option<AdamState>) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        if params.len() != model.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} tensors, got {}",
                model.params.len(),
                params.len()
            )));
        }
        for (slot, p) in model.params.iter_mut().zip(params) {
            if slot.name != p.name || slot.value.shape() != p.value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "expected {} {:?}, got {} {:?}",
                    slot.name,
                    slot.value.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
            *slot = p;
        }
        if let Some(adam) = adam {
            let aligned = |xs: &[Array]| {
                xs.len() == model.params.len()
                    && xs.iter().zip(&model.params).all(|(a, p)| a.shape() == p.value.shape())
            };
            if !aligned(&adam.m) || !aligned(&adam.v) {
                return Err(Error::ShapeMismatch("optimizer moments do not match parameters".into()));
            }
            model.adam = adam;
        }
        Ok(model)
    }

    pub fn config(&self) -> FreqSrConfig {
        self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Array> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Array> {
        self.params.iter_mut().find(|p| p.name == name).map(|p| &mut p.value)
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub(crate) fn adam_mut(&mut self) -> (&mut [Param], &mut AdamState) {
        (&mut self.params, &mut self.adam)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.data().iter().all(|v| v.is_finite()))
    }

    fn conv(&self, layer: usize, x: &Tensor4) -> Result<Tensor4> {
        conv2d(x, &self.params[2 * layer].value, &self.params[2 * layer + 1].value, self.depthwise[layer])
    }

    fn block(&self, b: usize, x: &Tensor4) -> Result<(Tensor4, Tensor4)> {
        let l = 1 + 2 * b;
        let a = self.conv(l, x)?;
        let mut y = self.conv(l + 1, &relu(&a))?;
        y.add_assign(x);
        Ok((y, a))
    }

    fn num_blocks(&self) -> usize {
        self.config.depthwise_blocks + self.config.standard_blocks
    }

    fn check_input(&self, x: &Tensor4) -> Result<()> {
        if x.channels() != CHANNELS {
            return Err(Error::ShapeMismatch(format!("network input needs 64 channels, got {}", x.channels())));
        }
        Ok(())
    }

    /// Head conv, depthwise blocks, standard blocks, tail conv. Shape-preserving.
    pub fn forward(&self, x: &Tensor4) -> Result<Tensor4> {
        self.check_input(x)?;
        let mut h = self.conv(0, x)?;
        for b in 0..self.num_blocks() {
            h = self.block(b, &h)?.0;
        }
        self.conv(self.num_blocks() * 2 + 1, &h)
    }

    /// Only the depthwise residual blocks, applied to an `F`-channel tensor.
    pub fn depthwise_stage(&self, h: &Tensor4) -> Result<Tensor4> {
        if h.channels() != self.config.features {
            return Err(Error::ShapeMismatch(format!(
                "feature tensor needs {} channels, got {}",
                self.config.features,
                h.channels()
            )));
        }
        let mut h = h.clone();
        for b in 0..self.config.depthwise_blocks {
            h = self.block(b, &h)?.0;
        }
        Ok(h)
    }

    /// Forward pass that records what the backward pass needs.
    pub fn forward_traced(&self, x: &Tensor4) -> Result<(Tensor4, Trace)> {
        self.check_input(x)?;
        let mut h = self.conv(0, x)?;
        let mut blocks = Vec::with_capacity(self.num_blocks());
        for b in 0..self.num_blocks() {
            let (y, a) = self.block(b, &h)?;
            blocks.push((h, a));
            h = y;
        }
        let out = self.conv(self.num_blocks() * 2 + 1, &h)?;
        Ok((out, Trace { input: x.clone(), blocks, last: h }))
    }

    /// Backpropagates `grad` (gradient of the loss w.r.t. the output).
    pub fn backward(&self, trace: &Trace, grad: &Tensor4, need_input: bool) -> Result<Gradients> {
        let n = self.num_blocks();
        let mut out: Vec<Array> = self.params.iter().map(|p| Array::zeros(p.value.shape())).collect();
        let mut put = |layer: usize, w: Array, b: Array| {
            out[2 * layer] = w;
            out[2 * layer + 1] = b;
        };
        let tail = 2 * n + 1;
        let g = conv2d_backward_impl(&trace.last, &self.params[2 * tail].value, grad, false, true)?;
        put(tail, g.weight, g.bias);
        let mut g = g.input.expect("requested");
        for b in (0..n).rev() {
            let (x, a) = &trace.blocks[b];
            let l = 1 + 2 * b;
            let dw = self.depthwise[l];
            let g2 = conv2d_backward_impl(&relu(a), &self.params[2 * (l + 1)].value, &g, dw, true)?;
            put(l + 1, g2.weight, g2.bias);
            let ga = relu_backward(a, &g2.input.expect("requested"));
            let g1 = conv2d_backward_impl(x, &self.params[2 * l].value, &ga, dw, true)?;
            put(l, g1.weight, g1.bias);
            g.add_assign(&g1.input.expect("requested"));
        }
        let g0 = conv2d_backward_impl(&trace.input, &self.params[0].value, &g, false, need_input)?;
        put(0, g0.weight, g0.bias);
        Ok(Gradients { params: out, input: g0.input })
    }
}
