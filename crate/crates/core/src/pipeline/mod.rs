//! End-to-end workflows behind the command-line tool: decode benchmarks,
//! dataset synthesis, training and inference, plus their JSON reports.

pub mod bench;
pub mod dataset;
pub mod infer;
pub mod report;
pub mod train;

pub use bench::{bench_decode, DecodeBenchConfig};
pub use dataset::{make_dataset, Manifest, Pair};
pub use infer::{measure, super_resolve, super_resolve_bytes};
pub use report::{BenchReport, InferReport, QualityReport};
pub use train::{load_sample, run_training, LoaderKind, TrainConfig};
