use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{FreqSrConfig, FreqSrModel};
use super::optim::{adam_step, l1_loss};
use super::tensor::Tensor4;
use crate::error::{Error, Result};

/// Result of [`train`]: the trained model, per-epoch mean training loss, and
/// the dataset mean loss before and after training.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FreqSrModel,
    pub history: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Generator for per-epoch shuffles, independent of the init stream.
pub fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed)
}

/// Mean L1 loss of `model` over `(input, target)` pairs.
pub fn evaluate(model: &FreqSrModel, dataset: &[(Tensor4, Tensor4)]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for (x, y) in dataset {
        sum += l1_loss(&model.forward(x)?, y)?.0;
    }
    Ok(sum / dataset.len() as f64)
}

/// One forward/backward/Adam update on a single pair; returns the loss
/// before the update.
pub fn train_step(model: &mut FreqSrModel, x: &Tensor4, y: &Tensor4, lr: f64) -> Result<f64> {
    let (pred, trace) = model.forward_traced(x)?;
    let (loss, grad) = l1_loss(&pred, y)?;
    let grads = model.backward(&trace, &grad, false)?;
    adam_step(model, &grads, lr)?;
    Ok(loss)
}

/// Batch-size-1 Adam training with L1 loss. Initialization and per-epoch
/// shuffling both come from `seed`, so runs are reproducible.
pub fn train(dataset: &[(Tensor4, Tensor4)], cfg: FreqSrConfig, epochs: usize, lr: f64, seed: u64) -> Result<TrainOutcome> {
    train_with(dataset, FreqSrModel::new(cfg, seed)?, epochs, lr, seed, |_, _| {})
}

/// Like [`train`] but starting from `model` and reporting `(epoch, mean loss)`
/// after every epoch.
pub fn train_with(
    dataset: &[(Tensor4, Tensor4)],
    mut model: FreqSrModel,
    epochs: usize,
    lr: f64,
    seed: u64,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (x, y) in dataset {
        x.check_same(y, "training pair")?;
    }
    let initial_loss = evaluate(&model, dataset)?;
    let mut rng = shuffle_rng(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let (x, y) = &dataset[i];
            sum += train_step(&mut model, x, y, lr)?;
        }
        let mean = sum / dataset.len() as f64;
        history.push(mean);
        on_epoch(epoch, mean);
    }
    let final_loss = if epochs == 0 { initial_loss } else { evaluate(&model, dataset)? };
    Ok(TrainOutcome { model, history, initial_loss, final_loss })
}
