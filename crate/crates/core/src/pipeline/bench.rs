//! Decode-path timing: the same in-memory files, decoded to coefficients and
//! to RGB, in the same order, with warmup passes discarded.

use std::hint::black_box;
use std::time::Duration;

use serde::Serialize;

use super::report::{unix_now, BenchReport, DecodeComparison, PathStats, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::jpeg::{decode_to_dct, decode_to_rgb};
use crate::metrics::{LatencyStats, Stopwatch};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeBenchConfig {
    /// Timed passes over the corpus.
    pub iterations: usize,
    /// Untimed passes before measuring.
    pub warmup: usize,
    /// Worker threads for the data-parallel stages (0 = default).
    pub threads: usize,
}

impl Default for DecodeBenchConfig {
    fn default() -> Self {
        DecodeBenchConfig { iterations: 3, warmup: 1, threads: 0 }
    }
}

fn stats(samples: &[Duration]) -> Result<PathStats> {
    let latency = LatencyStats::from_durations(samples)?;
    Ok(PathStats { latency, fps: 1000.0 / latency.mean_ms })
}

/// Times both decode paths over `files`. Every file must decode; the first
/// failure aborts the run.
pub fn bench_decode(files: &[Vec<u8>], cfg: DecodeBenchConfig) -> Result<BenchReport> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    if files.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let started = unix_now();
    let (dct, rgb, threads) = par::with_threads(cfg.threads, || -> Result<_> {
        for _ in 0..cfg.warmup {
            for f in files {
                black_box(decode_to_dct(f)?);
                black_box(decode_to_rgb(f)?);
            }
        }
        let mut dct = Vec::with_capacity(files.len() * cfg.iterations);
        let mut rgb = Vec::with_capacity(files.len() * cfg.iterations);
        for _ in 0..cfg.iterations {
            for f in files {
                let sw = Stopwatch::start();
                black_box(decode_to_dct(f)?);
                dct.push(sw.elapsed());
            }
            for f in files {
                let sw = Stopwatch::start();
                black_box(decode_to_rgb(f)?);
                rgb.push(sw.elapsed());
            }
        }
        Ok((dct, rgb, par::compute_threads()))
    })??;
    let (dct, rgb) = (stats(&dct)?, stats(&rgb)?);
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        command: "bench-decode".into(),
        corpus_size: files.len(),
        threads,
        warmup: cfg.warmup,
        iterations: cfg.iterations,
        started_unix_s: started,
        finished_unix_s: unix_now(),
        decode: Some(DecodeComparison { dct, rgb, speedup: rgb.latency.mean_ms / dct.latency.mean_ms }),
        loader: None,
        loader_fps: None,
        pipeline_fps: None,
        training: None,
        config: serde_json::to_value(cfg).expect("plain struct"),
    })
}
