mod common;

use freqsr::net::{
    conv2d, evaluate, load_weights, relu, residual_block, save_weights, train, Array, FreqSrConfig, FreqSrModel, Tensor4,
};
use freqsr::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor4 {
    Tensor4::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0))
}

fn random_array(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Array {
    let n = shape.iter().product();
    Array::from_vec(shape, (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

fn toy() -> FreqSrConfig {
    FreqSrConfig { features: 8, depthwise_blocks: 1, standard_blocks: 1 }
}

/// Randomizes biases too, so that no parameter has a trivially zero gradient.
fn toy_model(seed: u64) -> FreqSrModel {
    let mut m = FreqSrModel::new(toy(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for p in m.params_mut() {
        if p.name.ends_with(".bias") {
            for v in p.value.data_mut() {
                *v = rng.gen_range(-0.1..0.1);
            }
        }
    }
    m
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = toy_model(4);
    let x = random(&mut rng, 64, 6, 6);
    let probe = random(&mut rng, 64, 6, 6);
    let r = common::gradcheck::check(&model, &x, &probe, 1e-3, 7);
    println!("checked {} coordinates, {} kinks, max rel err {:.3e}", r.checked, r.kinks, r.max_rel_err);
    assert!(r.checked > model.num_params());
    assert!(r.kinks * 100 < r.checked, "too many kinks: {}", r.kinks);
    assert!(r.max_rel_err <= 1e-4);
}

#[test]
fn layers_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(&mut rng, 5, 6, 7);
    let probe = random(&mut rng, 5, 6, 7);
    let w = random_array(&mut rng, &[5, 5, 3, 3], 0.5);
    let wd = random_array(&mut rng, &[5, 1, 3, 3], 0.5);
    let b = random_array(&mut rng, &[5], 0.1);
    let std_err = common::gradcheck::check_conv(&x, &w, &b, &probe, false, 1e-3);
    let dw_err = common::gradcheck::check_conv(&x, &wd, &b, &probe, true, 1e-3);
    let relu_err = common::gradcheck::check_relu(&x, &probe, 1e-4);
    assert!(std_err <= 1e-5 && dw_err <= 1e-5 && relu_err <= 1e-5, "{std_err} {dw_err} {relu_err}");
}

#[test]
fn residual_block_matches_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dw in [true, false] {
        let x = random(&mut rng, 4, 5, 5);
        let shape: &[usize] = if dw { &[4, 1, 3, 3] } else { &[4, 4, 3, 3] };
        let (w1, w2) = (random_array(&mut rng, shape, 0.5), random_array(&mut rng, shape, 0.5));
        let (b1, b2) = (random_array(&mut rng, &[4], 0.1), random_array(&mut rng, &[4], 0.1));
        let y = residual_block(&x, &w1, &b1, &w2, &b2, dw).unwrap();
        let r = conv2d(&relu(&conv2d(&x, &w1, &b1, dw).unwrap()), &w2, &b2, dw).unwrap();
        for ((a, r), x) in y.data().iter().zip(r.data()).zip(x.data()) {
            assert!((a - (x + r)).abs() <= 1e-10);
        }
    }
}

#[test]
fn dead_relu_path_passes_input_through() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random(&mut rng, 3, 4, 4);
    let w1 = Array::zeros(&[3, 1, 3, 3]);
    let b1 = Array::from_vec(&[3], vec![-1.0; 3]).unwrap();
    let w2 = random_array(&mut rng, &[3, 1, 3, 3], 1.0);
    let b2 = Array::zeros(&[3]);
    assert_eq!(residual_block(&x, &w1, &b1, &w2, &b2, true).unwrap(), x);
}

#[test]
fn depthwise_stage_keeps_channels_independent() {
    let cfg = FreqSrConfig { features: 6, depthwise_blocks: 3, standard_blocks: 1 };
    let m = FreqSrModel::new(cfg, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random(&mut rng, 6, 7, 7);
    let base = m.depthwise_stage(&h).unwrap();
    for c in 0..6 {
        let mut hp = h.clone();
        for v in &mut hp.data_mut()[c * 49..(c + 1) * 49] {
            *v += 0.75;
        }
        let out = m.depthwise_stage(&hp).unwrap();
        for o in 0..6 {
            let changed = out.channel(o) != base.channel(o);
            assert_eq!(changed, o == c, "perturbing {c} affected {o}");
        }
    }
}

#[test]
fn default_network_preserves_shape() {
    let m = FreqSrModel::new(FreqSrConfig::default(), 1).unwrap();
    let x = Tensor4::zeros(64, 64, 64);
    assert_eq!(m.forward(&x).unwrap().dims(), (1, 64, 64, 64));
    assert!(matches!(m.forward(&Tensor4::zeros(32, 8, 8)), Err(Error::ShapeMismatch(_))));
}

fn toy_pairs(n: usize, seed: u64) -> Vec<(Tensor4, Tensor4)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = random(&mut rng, 64, 8, 8);
            let y = Tensor4::from_fn(64, 8, 8, |c, i, j| 0.5 * x.at(c, i, j) + 0.1 * (c as f64 / 64.0));
            (x, y)
        })
        .collect()
}

#[test]
fn toy_training_halves_the_loss_deterministically() {
    let data = toy_pairs(8, 10);
    let cfg = FreqSrConfig { features: 16, depthwise_blocks: 1, standard_blocks: 1 };
    let a = train(&data, cfg, 25, 1e-3, 42).unwrap();
    println!("initial {:.5} final {:.5}", a.initial_loss, a.final_loss);
    assert!(a.final_loss <= 0.5 * a.initial_loss);
    assert_eq!(a.history.len(), 25);
    let b = train(&data, cfg, 25, 1e-3, 42).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.model, b.model);
    assert_eq!(a.model.adam().step, 200);
}

#[test]
fn zero_epochs_and_empty_dataset() {
    let data = toy_pairs(2, 11);
    let r = train(&data, toy(), 0, 1e-3, 1).unwrap();
    assert!(r.history.is_empty());
    assert_eq!(r.model, FreqSrModel::new(toy(), 1).unwrap());
    assert_eq!(r.final_loss, evaluate(&r.model, &data).unwrap());
    assert!(matches!(train(&[], toy(), 3, 1e-3, 1), Err(Error::EmptyDataset)));
}

#[test]
fn weights_file_roundtrip() {
    let data = toy_pairs(2, 12);
    let trained = train(&data, toy(), 2, 1e-3, 3).unwrap().model;
    let dir = std::env::temp_dir().join(format!("freqsr-net-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.fsrw");
    save_weights(&trained, &path).unwrap();
    assert_eq!(load_weights(&path).unwrap(), trained);
    std::fs::write(&path, b"JUNKJUNKJUNK").unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Format(_))));
    std::fs::remove_dir_all(&dir).ok();
}
