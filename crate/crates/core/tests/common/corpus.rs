//! The mixed decoder corpus: committed files from a third-party encoder,
//! files from a second independent Rust encoder, and files from our own
//! encoder. Also consumed by the command-line acceptance suite.

#![allow(dead_code)]

use freqsr::blocks::{RgbImage, Subsampling};
use freqsr::jpeg::encode_baseline;
use freqsr::synth::{gradient_card, test_card};
use jpeg_encoder::{ColorType, Encoder, SamplingFactor};

pub const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data");

pub fn data(name: &str) -> Vec<u8> {
    std::fs::read(format!("{DATA}/{name}")).unwrap()
}

pub fn external(img: &RgbImage, quality: u8, sampling: SamplingFactor, restart: u16, optimize: bool) -> Vec<u8> {
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, quality);
    enc.set_sampling_factor(sampling);
    if restart > 0 {
        enc.set_restart_interval(restart);
    }
    enc.set_optimized_huffman_tables(optimize);
    enc.encode(img.data(), img.width() as u16, img.height() as u16, ColorType::Rgb).unwrap();
    out
}

pub fn corpus() -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for name in [
        "astronaut.jpg",
        "coffee.jpg",
        "chelsea.jpg",
        "rocket.jpg",
        "hubble_deep_field.jpg",
        "ihc.jpg",
        "pil_420_odd_rst.jpg",
        "pil_420_q100.jpg",
        "pil_gray.jpg",
        "pil_444_odd_q60.jpg",
    ] {
        files.push((name.to_string(), data(name)));
    }
    let variants = [
        (50, SamplingFactor::R_4_4_4, 0, false),
        (90, SamplingFactor::R_4_2_0, 0, false),
        (100, SamplingFactor::R_4_2_0, 0, false),
        (100, SamplingFactor::R_4_4_4, 0, false),
        (75, SamplingFactor::R_4_2_0, 3, false),
        (85, SamplingFactor::R_4_4_4, 7, true),
        (95, SamplingFactor::R_4_2_0, 0, true),
    ];
    for (i, &(q, s, rst, opt)) in variants.iter().enumerate() {
        let (w, h) = [(96, 64), (123, 77), (160, 160), (33, 200), (250, 130), (64, 64), (9, 17)][i];
        let img = test_card(w, h, 100 + i as u64).unwrap();
        files.push((format!("external q{q} {s:?} rst{rst} opt{opt} {w}x{h}"), external(&img, q, s, rst, opt)));
    }
    for (i, &(w, h, q, s)) in [
        (41, 23, 100, Subsampling::S420),
        (256, 192, 100, Subsampling::S420),
        (200, 120, 80, Subsampling::S444),
        (77, 45, 30, Subsampling::S420),
    ]
    .iter()
    .enumerate()
    {
        let img = test_card(w, h, 7 + i as u64).unwrap();
        files.push((format!("own q{q} {s} {w}x{h}"), encode_baseline(&img, q, s).unwrap()));
    }
    let grad = gradient_card(128, 96).unwrap();
    files.push(("own gradient".into(), encode_baseline(&grad, 100, Subsampling::S420).unwrap()));
    files
}

