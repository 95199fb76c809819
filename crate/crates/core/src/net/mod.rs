//! Minimal CNN engine for the frequency-domain network: 3x3 standard and
//! depthwise convolutions, ReLU residual blocks, L1 loss, Adam and a
//! batch-size-1 training loop.

pub mod conv;
pub mod fsrw;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod train;

pub use conv::{conv2d, conv2d_backward, relu, relu_backward, ConvGrads};
pub use fsrw::{load_weights, save_weights};
pub use model::{residual_block, AdamState, FreqSrConfig, FreqSrModel, Gradients, Param, Trace, CHANNELS};
pub use optim::{adam_step, adam_step_with, l1_loss, AdamConfig};
pub use tensor::{Array, Tensor4};
pub use train::{evaluate, shuffle_rng, train, train_step, train_with, TrainOutcome};
