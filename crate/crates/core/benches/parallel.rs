//! Data-parallel kernels on one thread versus the default rayon pool.
//! Build with `--no-default-features` to bench the sequential fallback.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use freqsr::blocks::Subsampling;
use freqsr::freq::upsample_dct_x2;
use freqsr::jpeg::{decode_to_dct, encode_baseline};
use freqsr::net::{conv2d, Array, Tensor4};
use freqsr::par::with_threads;
use freqsr::spatial::plane_to_spatial;
use freqsr::synth::test_card;

fn pools() -> [(&'static str, usize); 2] {
    [("1 thread", 1), ("default pool", 0)]
}

fn kernels(c: &mut Criterion) {
    let jpeg = encode_baseline(&test_card(512, 512, 1).unwrap(), 100, Subsampling::S420).unwrap();
    let y = decode_to_dct(&jpeg).unwrap().y;
    let x = Tensor4::from_fn(64, 32, 32, |c, i, j| ((c * 31 + i * 7 + j) % 17) as f64 / 17.0 - 0.5);
    let w = Array::from_vec(&[64, 64, 3, 3], (0..64 * 64 * 9).map(|i| ((i % 13) as f64 - 6.0) * 0.01).collect()).unwrap();
    let b = Array::zeros(&[64]);

    let mut g = c.benchmark_group("upsample_dct_x2");
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| with_threads(threads, || black_box(upsample_dct_x2(&y))).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("plane_to_spatial");
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| with_threads(threads, || black_box(plane_to_spatial(&y))).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("conv2d_64x32x32");
    g.sample_size(20);
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| with_threads(threads, || black_box(conv2d(&x, &w, &b, false).unwrap())).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
