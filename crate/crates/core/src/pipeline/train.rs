//! End-to-end training: a worker pool decodes and preprocesses every pair
//! each epoch, then the network takes one Adam step per pair.
//!
//! Two interchangeable loaders produce the same tensors: `dct` reads
//! coefficients straight from the bitstream, `rgb` decodes to pixels and
//! takes the forward DCT of the luma, as a pixel-domain pipeline would.

use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Manifest;
use super::report::{unix_now, BenchReport, TrainingSummary, SCHEMA_VERSION};
use crate::blocks::{blockify, DctPlane, NormParams};
use crate::error::{Error, Result};
use crate::freq::{crop_at, crop_origin, normalize_plane, preprocess_luma, CropSpec};
use crate::jpeg::{decode_to_dct, decode_to_rgb};
use crate::metrics::{fps, mean, Stopwatch};
use crate::net::{evaluate, shuffle_rng, train_step, FreqSrConfig, FreqSrModel, Tensor4};
use crate::spatial::{luma, spatial_to_plane};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoaderKind {
    #[default]
    Dct,
    Rgb,
}

impl FromStr for LoaderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dct" => Ok(LoaderKind::Dct),
            "rgb" => Ok(LoaderKind::Rgb),
            _ => Err(Error::InvalidArgument(format!("unknown loader {s:?} (expected dct or rgb)"))),
        }
    }
}

impl std::fmt::Display for LoaderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LoaderKind::Dct => "dct",
            LoaderKind::Rgb => "rgb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    /// LR crop side in blocks; the network sees `2 * patch_blocks`.
    pub patch_blocks: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub loader: LoaderKind,
    /// Loader workers (0 = available parallelism).
    pub threads: usize,
    pub model: FreqSrConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            patch_blocks: 32,
            epochs: 1,
            lr: 1e-4,
            seed: 0,
            loader: LoaderKind::Dct,
            threads: 0,
            model: FreqSrConfig::default(),
        }
    }
}

fn luma_plane(bytes: &[u8], loader: LoaderKind) -> Result<DctPlane> {
    match loader {
        LoaderKind::Dct => {
            let img = decode_to_dct(bytes)?;
            img.chroma()?;
            Ok(img.y)
        }
        LoaderKind::Rgb => Ok(spatial_to_plane(&luma(&decode_to_rgb(bytes)?))),
    }
}

/// Network input and supervision target for one LR/HR pair: the centred
/// `S x S` LR block crop, normalized and upsampled to `2S x 2S`, and the
/// co-located `2S x 2S` HR block crop, normalized.
pub fn load_sample(lr: &[u8], hr: &[u8], loader: LoaderKind, patch_blocks: usize) -> Result<(Tensor4, Tensor4)> {
    let p = NormParams::default();
    let spec = CropSpec::new(patch_blocks)?;
    let y_lr = luma_plane(lr, loader)?;
    let input = preprocess_luma(&y_lr, Some(spec), &p)?;
    let (r0, c0) = crop_origin(y_lr.rows(), y_lr.cols(), patch_blocks)?;
    let y_hr = luma_plane(hr, loader)?;
    let target = crop_at(&y_hr, 2 * r0, 2 * c0, 2 * patch_blocks)?;
    let target = blockify(&normalize_plane(&target, &p));
    Ok((Tensor4::from_freq(&input), Tensor4::from_freq(&target)))
}

fn worker_count(threads: usize) -> usize {
    if threads > 0 {
        threads
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

/// Loads every pair with `threads` workers. Results come back over a
/// channel in completion order and are slotted by index.
pub fn load_all(
    pairs: &[(Vec<u8>, Vec<u8>)],
    loader: LoaderKind,
    patch_blocks: usize,
    threads: usize,
) -> Result<Vec<(Tensor4, Tensor4)>> {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let workers = worker_count(threads).min(pairs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((lr, hr)) = pairs.get(i) else { break };
                if tx.send((i, load_sample(lr, hr, loader, patch_blocks))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut out: Vec<Option<(Tensor4, Tensor4)>> = vec![None; pairs.len()];
    for (i, r) in rx {
        out[i] = Some(r?);
    }
    Ok(out.into_iter().map(|s| s.expect("every index loaded")).collect())
}

/// Reads the encoded pairs listed in a manifest.
pub fn read_pairs(manifest: &Manifest, dir: &Path) -> Result<Vec<(Vec<u8>, Vec<u8>)>> {
    manifest
        .pairs
        .iter()
        .map(|p| Ok((std::fs::read(dir.join(&p.lr))?, std::fs::read(dir.join(&p.hr))?)))
        .collect()
}

/// Trains on the pairs of `manifest_path`. `on_epoch(epoch, mean_loss,
/// loader_fps)` is called after each epoch. With zero epochs the loader runs
/// once so that its throughput is still measured.
pub fn run_training(
    manifest_path: &Path,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64, f64),
) -> Result<(FreqSrModel, BenchReport)> {
    let started = unix_now();
    let (manifest, dir) = Manifest::load(manifest_path)?;
    if manifest.pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // File reads stay outside the timed region for both loaders.
    let encoded = read_pairs(&manifest, &dir)?;
    let mut model = FreqSrModel::new(cfg.model, cfg.seed)?;
    let mut rng = shuffle_rng(cfg.seed);
    let n = encoded.len();
    let (mut loader_fps, mut pipeline_fps, mut history) = (Vec::new(), Vec::new(), Vec::new());
    let mut initial_loss = None;
    let mut last = Vec::new();
    for epoch in 0..cfg.epochs.max(1) {
        let (samples, load_time) = Stopwatch::time(|| load_all(&encoded, cfg.loader, cfg.patch_blocks, cfg.threads));
        let samples = samples?;
        let lf = fps(n, load_time.max(Duration::from_nanos(1)))?;
        loader_fps.push(lf);
        if cfg.epochs == 0 {
            initial_loss = Some(evaluate(&model, &samples)?);
            last = samples;
            break;
        }
        if initial_loss.is_none() {
            initial_loss = Some(evaluate(&model, &samples)?);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (sum, step_time) = Stopwatch::time(|| -> Result<f64> {
            let mut sum = 0.0;
            for &i in &order {
                sum += train_step(&mut model, &samples[i].0, &samples[i].1, cfg.lr)?;
            }
            Ok(sum)
        });
        let loss = sum? / n as f64;
        history.push(loss);
        pipeline_fps.push(fps(n, load_time + step_time)?);
        on_epoch(epoch, loss, lf);
        last = samples;
    }
    let initial_loss = initial_loss.expect("at least one pass");
    let final_loss = if cfg.epochs == 0 { initial_loss } else { evaluate(&model, &last)? };
    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        command: "train".into(),
        corpus_size: n,
        threads: worker_count(cfg.threads).min(n),
        warmup: 0,
        iterations: cfg.epochs,
        started_unix_s: started,
        finished_unix_s: unix_now(),
        decode: None,
        loader: Some(cfg.loader.to_string()),
        loader_fps: mean(&loader_fps),
        pipeline_fps: mean(&pipeline_fps),
        training: Some(TrainingSummary {
            epochs: cfg.epochs,
            steps: cfg.epochs * n,
            initial_loss,
            final_loss,
            history,
            param_count: model.num_params(),
        }),
        config: serde_json::to_value(cfg).expect("plain struct"),
    };
    Ok((model, report))
}
