//! `freqsr` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors (bad or
//! unsupported input files, shape problems, I/O failures).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use freqsr::blocks::Subsampling;
use freqsr::formats::{dctt, write_image};
use freqsr::jpeg::{decode_to_dct, decode_to_rgb, encode_baseline};
use freqsr::metrics::{center_crop_px, psnr, ssim, Mode};
use freqsr::net::{load_weights, save_weights, FreqSrConfig};
use freqsr::pipeline::dataset::{list_rasters, load_raster};
use freqsr::pipeline::report::{InferReport, SCHEMA_VERSION};
use freqsr::pipeline::{bench_decode, make_dataset, measure, run_training, super_resolve, DecodeBenchConfig, LoaderKind, TrainConfig};
use freqsr::synth::test_card;
use freqsr::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "freqsr", version, about = "Super-resolution on JPEG DCT coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeMode {
    /// Dequantized coefficients as a DCTT file (Y, Cb, Cr records).
    Dct,
    /// Pixels as PNG, or PPM for a .ppm/.pnm output path.
    Rgb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loader {
    Dct,
    Rgb,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthFormat {
    Png,
    Jpg,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a baseline JPEG to coefficients or pixels.
    Decode {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "dct")]
        mode: DecodeMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time coefficient decoding against full RGB decoding over a corpus.
    BenchDecode {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "FREQSR_THREADS", default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build LR/HR JPEG pairs and a manifest from a folder of images.
    MakeDataset {
        #[arg(long)]
        hr: PathBuf,
        #[arg(long, default_value_t = 2)]
        scale: usize,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u8).range(1..=100))]
        quality: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the network on a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 32)]
        patch_blocks: usize,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// How training samples are loaded.
        #[arg(long, value_enum, default_value = "dct")]
        baseline_loader: Loader,
        /// Loader worker threads (0 = all cores).
        #[arg(long, env = "FREQSR_THREADS", default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = 64)]
        features: usize,
        #[arg(long, default_value_t = 4)]
        depthwise_blocks: usize,
        #[arg(long, default_value_t = 4)]
        standard_blocks: usize,
        /// Write the run's BenchReport here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Super-resolve a JPEG 2x with trained weights.
    Infer {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// High-resolution reference for PSNR/SSIM.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
    },
    /// Model-free 2x DCT-domain interpolation of a JPEG.
    Upsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
    },
    /// PSNR and SSIM (luma and RGB) between two images.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        /// Measure on a centred square crop of this size.
        #[arg(long)]
        crop: Option<usize>,
    },
    /// Write seeded synthetic test images.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 256)]
        min_size: usize,
        #[arg(long, default_value_t = 1024)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "png")]
        format: SynthFormat,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u8).range(1..=100))]
        quality: u8,
    },
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn decode(input: &Path, mode: DecodeMode, out: &Path) -> Result<()> {
    let bytes = std::fs::read(input)?;
    match mode {
        DecodeMode::Dct => {
            let img = decode_to_dct(&bytes)?;
            std::fs::write(out, dctt::to_bytes(&dctt::image_records(&img)?))?;
            eprintln!(
                "{}x{} {}: Y {}x{} blocks",
                img.width,
                img.height,
                img.subsampling,
                img.y.rows(),
                img.y.cols()
            );
        }
        DecodeMode::Rgb => write_image(&decode_to_rgb(&bytes)?, out)?,
    }
    Ok(())
}

fn bench(dir: &Path, cfg: DecodeBenchConfig, json: Option<&Path>) -> Result<()> {
    let paths: Vec<PathBuf> = list_rasters(dir)?
        .into_iter()
        .filter(|p| p.extension().and_then(|e| e.to_str()).is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "jpg" | "jpeg")))
        .collect();
    let files = paths.iter().map(std::fs::read).collect::<std::io::Result<Vec<_>>>()?;
    let report = bench_decode(&files, cfg)?;
    let d = report.decode.expect("decode section");
    eprintln!(
        "{} files x {} iterations: dct {:.3} ms, rgb {:.3} ms (mean), speedup {:.2}x",
        report.corpus_size, report.iterations, d.dct.latency.mean_ms, d.rgb.latency.mean_ms, d.speedup
    );
    write_json(&report, json)
}

fn reference_quality(out: &freqsr::blocks::RgbImage, reference: Option<&Path>) -> Result<Option<freqsr::pipeline::QualityReport>> {
    reference.map(|r| measure(out, &load_raster(r)?, &display(r))).transpose()
}

fn upscale(
    weights: Option<&Path>,
    input: &Path,
    out: &Path,
    report: Option<&Path>,
    reference: Option<&Path>,
) -> Result<()> {
    let model = weights.map(load_weights).transpose()?;
    let lr = decode_to_dct(&std::fs::read(input)?)?;
    let start = Instant::now();
    let sr = super_resolve(model.as_ref(), &lr)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    write_image(&sr, out)?;
    let quality = reference_quality(&sr, reference)?;
    if let Some(q) = &quality {
        eprintln!("PSNR-Y {:?} dB, SSIM-Y {:.4} on {}px crop", q.psnr_y, q.ssim_y, q.crop);
    }
    if report.is_some() {
        let r = InferReport {
            schema_version: SCHEMA_VERSION,
            input: display(input),
            output: display(out),
            weights: weights.map(display),
            input_width: lr.width,
            input_height: lr.height,
            output_width: sr.width(),
            output_height: sr.height(),
            elapsed_ms,
            reference: quality,
        };
        write_json(&r, report)?;
    }
    Ok(())
}

fn metrics(a: &Path, b: &Path, crop: Option<usize>) -> Result<()> {
    let (mut x, mut y) = (load_raster(a)?, load_raster(b)?);
    if let Some(c) = crop {
        x = center_crop_px(&x, c)?;
        y = center_crop_px(&y, c)?;
    }
    let finite = |v: f64| v.is_finite().then_some(v);
    let v = serde_json::json!({
        "width": x.width(),
        "height": x.height(),
        "psnr_y": finite(psnr(&x, &y, Mode::Y)?),
        "ssim_y": ssim(&x, &y, Mode::Y)?,
        "psnr_rgb": finite(psnr(&x, &y, Mode::Rgb)?),
        "ssim_rgb": ssim(&x, &y, Mode::Rgb)?,
    });
    write_json(&v, None)
}

#[allow(clippy::too_many_arguments)]
fn synth(out: &Path, count: usize, min: usize, max: usize, seed: u64, format: SynthFormat, quality: u8) -> Result<()> {
    if min == 0 || min > max {
        return Err(Error::InvalidArgument(format!("size range {min}..={max} is empty")));
    }
    std::fs::create_dir_all(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let (w, h) = (rng.gen_range(min..=max), rng.gen_range(min..=max));
        let img = test_card(w, h, seed.wrapping_mul(1_000_003).wrapping_add(i as u64))?;
        match format {
            SynthFormat::Png => write_image(&img, out.join(format!("card_{i:04}.png")))?,
            SynthFormat::Jpg => std::fs::write(
                out.join(format!("card_{i:04}.jpg")),
                encode_baseline(&img, quality, Subsampling::S420)?,
            )?,
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode { input, mode, out } => decode(&input, mode, &out),
        Command::BenchDecode { dir, iterations, warmup, threads, json } => {
            bench(&dir, DecodeBenchConfig { iterations, warmup, threads }, json.as_deref())
        }
        Command::MakeDataset { hr, scale, quality, out } => {
            let m = make_dataset(&hr, &out, scale, quality)?;
            eprintln!("{} pairs written to {}", m.pairs.len(), out.display());
            Ok(())
        }
        Command::Train {
            manifest,
            patch_blocks,
            epochs,
            lr,
            seed,
            weights,
            baseline_loader,
            threads,
            features,
            depthwise_blocks,
            standard_blocks,
            report,
        } => {
            let cfg = TrainConfig {
                patch_blocks,
                epochs,
                lr,
                seed,
                loader: match baseline_loader {
                    Loader::Dct => LoaderKind::Dct,
                    Loader::Rgb => LoaderKind::Rgb,
                },
                threads,
                model: FreqSrConfig { features, depthwise_blocks, standard_blocks },
            };
            let (model, r) = run_training(&manifest, &cfg, |e, loss, fps| {
                eprintln!("epoch {e}: loss {loss:.6}, loader {fps:.1} FPS");
            })?;
            eprintln!("loader ({}) {:.2} FPS, pipeline {:?} FPS", cfg.loader, r.loader_fps.unwrap_or(0.0), r.pipeline_fps);
            if let Some(w) = weights {
                save_weights(&model, w)?;
            }
            write_json(&r, report.as_deref())
        }
        Command::Infer { weights, input, out, report, reference } => {
            upscale(Some(&weights), &input, &out, report.as_deref(), reference.as_deref())
        }
        Command::Upsample { input, out, report, reference } => {
            upscale(None, &input, &out, report.as_deref(), reference.as_deref())
        }
        Command::Metrics { a, b, crop } => metrics(&a, &b, crop),
        Command::Synth { out, count, min_size, max_size, seed, format, quality } => {
            synth(&out, count, min_size, max_size, seed, format, quality)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidArgument(_) => 1,
                _ => 2,
            })
        }
    }
}
