use fnwl_core::dataio::{synth_generate, SynthConfig};
use fnwl_core::dataset::WindowDataset;
use fnwl_core::engine::ParamSet;
use fnwl_core::model::{build_model, encode_weights, ModelConfig};
use fnwl_core::training::{
    accuracy, adam_step, split_dataset, split_indices, train, AdamConfig, AdamState, SplitMode, TrainConfig,
};
use fnwl_core::{Error, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn first_adam_step_moves_by_learning_rate() {
    let mut theta = Tensor::from_vec(vec![1.0]);
    let g = Tensor::from_vec(vec![0.5]);
    let mut state = AdamState::new(&theta);
    adam_step(&mut theta, &g, &mut state, &AdamConfig::default()).unwrap();
    let expected = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
    assert!((theta.data()[0] - expected).abs() < 1e-15);
    assert_eq!(state.step, 1);
}

#[test]
fn zero_gradient_leaves_parameters_and_decays_moments() {
    let mut theta = Tensor::from_vec(vec![0.3, -2.0]);
    let mut state = AdamState::new(&theta);
    let cfg = AdamConfig::default();
    adam_step(&mut theta, &Tensor::from_vec(vec![1.0, -1.0]), &mut state, &cfg).unwrap();
    let (m1, v1) = (state.first[0].clone(), state.second[0].clone());
    let before = theta.clone();
    let zero = Tensor::zeros(&[2]);
    adam_step(&mut theta, &zero, &mut state, &cfg).unwrap();
    for i in 0..2 {
        assert_eq!(state.first[0].data()[i], 0.9 * m1.data()[i]);
        assert_eq!(state.second[0].data()[i], 0.999 * v1.data()[i]);
    }
    // Parameters still move on the decayed first moment, so check a fresh state.
    let mut fresh = AdamState::new(&before);
    let mut p = before.clone();
    adam_step(&mut p, &zero, &mut fresh, &cfg).unwrap();
    assert_eq!(p, before);
}

#[test]
fn zero_learning_rate_is_identity() {
    let cfg = ModelConfig {
        input_length: 8,
        lstm_hidden: 4,
        fc_hidden: 6,
        ..ModelConfig::default()
    };
    let mut w = build_model(&cfg, 3).unwrap();
    let orig = w.clone();
    let mut grads = w.zeros_like();
    for (_, t) in grads.named_mut() {
        t.fill(0.25);
    }
    let mut state = AdamState::new(&w);
    let adam = AdamConfig {
        learning_rate: 0.0,
        ..AdamConfig::default()
    };
    for _ in 0..3 {
        adam_step(&mut w, &grads, &mut state, &adam).unwrap();
    }
    assert_eq!(encode_weights(&w), encode_weights(&orig));
}

#[test]
fn adam_descends_a_parabola() {
    // Scalar reference simulation of the same update on f(θ) = θ².
    let (lr, b1, b2, eps) = (0.001f64, 0.9f64, 0.999f64, 1e-8f64);
    let (mut th, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
    let mut theta = Tensor::from_vec(vec![1.0]);
    let mut state = AdamState::new(&theta);
    let mut prev = 1.0f64;
    for t in 1..=100 {
        let g = 2.0 * th;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        th -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);

        let grad = Tensor::from_vec(vec![2.0 * theta.data()[0]]);
        adam_step(&mut theta, &grad, &mut state, &AdamConfig::default()).unwrap();
        let now = theta.data()[0];
        assert!((now - th).abs() <= 1e-12);
        assert!(now.abs() < prev.abs());
        prev = now;
    }
    assert!(prev.abs() < 0.95);
}

#[test]
fn non_finite_gradient_names_the_parameter() {
    let cfg = ModelConfig {
        input_length: 8,
        lstm_hidden: 4,
        fc_hidden: 6,
        ..ModelConfig::default()
    };
    let mut w = build_model(&cfg, 3).unwrap();
    let before = encode_weights(&w);
    let mut grads = w.zeros_like();
    grads.fc1.weight.data_mut()[5] = f64::NAN;
    let mut state = AdamState::new(&w);
    match adam_step(&mut w, &grads, &mut state, &AdamConfig::default()) {
        Err(Error::NonFinite(msg)) => assert!(msg.contains("fc1.W"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(encode_weights(&w), before);
    assert_eq!(state.step, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn second_moments_stay_non_negative(grads in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 5), 1..20)) {
        let mut theta = Tensor::zeros(&[5]);
        let mut state = AdamState::new(&theta);
        for g in grads {
            adam_step(&mut theta, &Tensor::from_vec(g), &mut state, &AdamConfig::default()).unwrap();
            prop_assert!(state.second[0].data().iter().all(|&v| v >= 0.0));
        }
    }
}

fn labelled(n: usize, subjects: usize) -> WindowDataset {
    let mut d = WindowDataset::empty(1, 2, 5.2, 1);
    for i in 0..n {
        d.push(&[i as f64, 0.0], (i % 4) as u8, &format!("subj{}", i % subjects))
            .unwrap();
    }
    d
}

#[test]
fn random_split_sizes_and_determinism() {
    let d = labelled(100, 1);
    let (train, test) = split_dataset(&d, 0.2, 7, SplitMode::Random).unwrap();
    assert_eq!((train.len(), test.len()), (80, 20));
    let (a1, b1) = split_indices(&d, 0.2, 7, SplitMode::Random).unwrap();
    let (a2, b2) = split_indices(&d, 0.2, 7, SplitMode::Random).unwrap();
    assert_eq!((a1.clone(), b1.clone()), (a2, b2));
    let mut all: Vec<usize> = a1.iter().chain(&b1).copied().collect();
    all.sort();
    assert_eq!(all, (0..100).collect::<Vec<_>>());
    let (_, other) = split_indices(&d, 0.2, 8, SplitMode::Random).unwrap();
    assert_ne!(other, b1);
    assert!(matches!(
        split_dataset(&d, 0.0, 7, SplitMode::Random),
        Err(Error::Split(_))
    ));
    assert!(matches!(
        split_dataset(&d, 1.0, 7, SplitMode::Random),
        Err(Error::Split(_))
    ));
}

#[test]
fn subject_split_never_straddles() {
    let cfg = SynthConfig {
        windows_per_class: 25,
        subjects: 5,
        bandpass: false,
        ..SynthConfig::default()
    };
    let d = synth_generate(&cfg).unwrap();
    for seed in 0..50 {
        for frac in [0.2, 0.4, 0.5, 0.8] {
            let (train, test) = split_indices(&d, frac, seed, SplitMode::BySubject).unwrap();
            assert_eq!(train.len() + test.len(), d.len());
            for i in &train {
                for j in &test {
                    assert_ne!(d.subjects[*i], d.subjects[*j]);
                }
            }
        }
    }
    let single = labelled(10, 1);
    assert!(matches!(
        split_dataset(&single, 0.2, 1, SplitMode::BySubject),
        Err(Error::Split(_))
    ));
}

fn tiny_config(classes: usize) -> ModelConfig {
    ModelConfig {
        input_channels: 2,
        input_length: 16,
        conv1_out: 4,
        conv2_out: 4,
        lstm_hidden: 8,
        fc_hidden: 16,
        classes,
        ..ModelConfig::default()
    }
}

/// Two classes whose windows differ in sign; noise keeps them non-trivial.
fn separable_toy(n: usize, seed: u64) -> WindowDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = WindowDataset::empty(2, 16, 5.2, 16);
    for i in 0..n {
        let label = (i % 2) as u8;
        let sign = if label == 0 { 1.0 } else { -1.0 };
        let w: Vec<f64> = (0..32).map(|_| sign * 0.5 + rng.random_range(-0.3..0.3)).collect();
        d.push(&w, label, "toy").unwrap();
    }
    d
}

#[test]
fn zero_epochs_keep_initialisation() {
    let cfg = tiny_config(2);
    let w = build_model(&cfg, 5).unwrap();
    let out = train(
        w.clone(),
        &cfg,
        &separable_toy(20, 1),
        None,
        &TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!(out.log.is_empty());
    assert_eq!(encode_weights(&out.weights), encode_weights(&w));
}

#[test]
fn separable_toy_is_learned_within_fifty_epochs() {
    let cfg = tiny_config(2);
    let data = separable_toy(100, 2);
    let tc = TrainConfig {
        epochs: 50,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let out = train(build_model(&cfg, 42).unwrap(), &cfg, &data, Some(&data), &tc).unwrap();
    assert_eq!(out.log.len(), 50);
    let reached = out.log.records.iter().position(|r| r.test_acc == Some(1.0));
    assert!(reached.is_some(), "{:?}", out.log.last());
    assert_eq!(out.log.last().unwrap().test_acc, Some(1.0));
}

#[test]
fn runs_are_reproducible() {
    let cfg = tiny_config(2);
    let data = separable_toy(37, 3);
    let tc = TrainConfig {
        epochs: 4,
        batch_size: 8,
        record_time: false,
        ..TrainConfig::default()
    };
    let a = train(build_model(&cfg, 9).unwrap(), &cfg, &data, Some(&data), &tc).unwrap();
    let b = train(build_model(&cfg, 9).unwrap(), &cfg, &data, Some(&data), &tc).unwrap();
    assert_eq!(a.log.to_csv(), b.log.to_csv());
    assert_eq!(encode_weights(&a.weights), encode_weights(&b.weights));
    assert!(a.log.to_csv().lines().skip(1).all(|l| l.ends_with(",0")));
    let c = train(
        build_model(&cfg, 9).unwrap(),
        &cfg,
        &data,
        Some(&data),
        &TrainConfig { seed: 10, ..tc },
    )
    .unwrap();
    assert_ne!(encode_weights(&a.weights), encode_weights(&c.weights));
}

#[test]
fn non_finite_loss_reports_coordinates() {
    let cfg = tiny_config(2);
    let mut w = build_model(&cfg, 1).unwrap();
    w.fc2.bias.data_mut()[0] = f64::NAN;
    let err = train(
        w,
        &cfg,
        &separable_toy(20, 1),
        None,
        &TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
    )
    .unwrap_err();
    match err {
        Error::NonFinite(msg) => assert!(msg.contains("epoch 1") && msg.contains("batch 1"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mismatched_data_is_rejected() {
    let cfg = tiny_config(2);
    let w = build_model(&cfg, 1).unwrap();
    let wrong = labelled(10, 1);
    assert!(matches!(
        train(w.clone(), &cfg, &wrong, None, &TrainConfig::default()),
        Err(Error::Dimension { .. })
    ));
    let empty = WindowDataset::empty(2, 16, 5.2, 1);
    assert!(train(w, &cfg, &empty, None, &TrainConfig::default()).is_err());
}

#[test]
fn log_csv_layout() {
    let cfg = tiny_config(2);
    let data = separable_toy(10, 4);
    let tc = TrainConfig {
        epochs: 2,
        record_time: false,
        ..TrainConfig::default()
    };
    let out = train(build_model(&cfg, 1).unwrap(), &cfg, &data, None, &tc).unwrap();
    let csv = out.log.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,train_acc,test_acc,seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[1].contains(",,"));
}

#[test]
fn synthetic_loss_mostly_decreases_early() {
    let data = synth_generate(&SynthConfig::default()).unwrap();
    let (train_set, _) = split_dataset(&data, 0.2, 42, SplitMode::Random).unwrap();
    let cfg = ModelConfig::default();
    let tc = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    let out = train(build_model(&cfg, 42).unwrap(), &cfg, &train_set, None, &tc).unwrap();
    let losses: Vec<f64> = out.log.records.iter().map(|r| r.train_loss).collect();
    let upticks = losses.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(upticks <= 1, "{losses:?}");
}

/// Without the bandpass the tones at 0.3 Hz and above stay in the data, and
/// both variants clear the learning thresholds at the default settings.
#[test]
fn unfiltered_synthetic_tones_are_learned() {
    let data = synth_generate(&SynthConfig {
        bandpass: false,
        ..SynthConfig::default()
    })
    .unwrap();
    let (train_set, test_set) = split_dataset(&data, 0.2, 42, SplitMode::Random).unwrap();
    let tc = TrainConfig {
        epochs: 200,
        record_time: false,
        ..TrainConfig::default()
    };
    for (cfg, threshold) in [
        (ModelConfig::default(), 0.95),
        (ModelConfig::default().cnn_only(), 0.90),
    ] {
        let out = train(build_model(&cfg, 42).unwrap(), &cfg, &train_set, None, &tc).unwrap();
        let acc = accuracy(&out.weights, &cfg, &test_set, 256).unwrap();
        assert!(acc >= threshold, "{:?}: {acc}", cfg.variant);
    }
}
