use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::metrics::LatencyStats;

pub const SCHEMA_VERSION: u32 = 1;

/// Seconds since the Unix epoch.
pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Latency summary and throughput of one decode path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub latency: LatencyStats,
    /// Images per second, from the mean latency.
    pub fps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeComparison {
    pub dct: PathStats,
    pub rgb: PathStats,
    /// Mean RGB-path latency divided by mean DCT-path latency.
    pub speedup: f64,
}

/// Timing and throughput record written by `bench-decode` and `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub command: String,
    pub corpus_size: usize,
    pub threads: usize,
    pub warmup: usize,
    pub iterations: usize,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode: Option<DecodeComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loader: Option<String>,
    /// Prepared samples per second of the loading stage, mean over epochs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loader_fps: Option<f64>,
    /// Samples per second of the whole loop (load, forward, backward, step).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSummary>,
    /// Echo of the settings the run used.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub history: Vec<f64>,
    pub param_count: usize,
}

/// Quality numbers for one super-resolved image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferReport {
    pub schema_version: u32,
    pub input: String,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    pub input_width: usize,
    pub input_height: usize,
    pub output_width: usize,
    pub output_height: usize,
    pub elapsed_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<QualityReport>,
}

/// PSNR (dB) and SSIM on a centred square crop. A PSNR of `null` means the
/// images were identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub path: String,
    pub crop: usize,
    pub psnr_y: Option<f64>,
    pub ssim_y: f64,
    pub psnr_rgb: Option<f64>,
    pub ssim_rgb: f64,
}

pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
