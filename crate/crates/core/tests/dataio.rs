use std::f64::consts::PI;

use fnwl_core::dataio::{
    decode_windows, encode_windows, parse_raw_csv, read_raw_csv, read_windows, synth_generate, write_windows,
    SynthConfig,
};
use fnwl_core::dataset::WindowDataset;
use fnwl_core::model::{build_model, decode_weights, encode_weights, ModelConfig};
use fnwl_core::preprocess::{design_butterworth_bandpass, filtfilt};
use fnwl_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn csv_text(subjects: &[(&str, usize)], dt: f64) -> String {
    let mut s = String::from("subject,t,c1,c2,c3,c4,c5,c6,c7,c8,label\n");
    for (name, n) in subjects {
        for i in 0..*n {
            let label = if i < 3 { -1 } else { (i / 10 % 4) as i32 };
            s.push_str(&format!("{name},{}", i as f64 * dt));
            for c in 0..8 {
                s.push_str(&format!(",{}", (i * (c + 1)) as f64 * 0.01));
            }
            s.push_str(&format!(",{label}\n"));
        }
    }
    s
}

#[test]
fn two_subject_file() {
    let text = csv_text(&[("s01", 40), ("s02", 25)], 1.0 / 5.2);
    let recs = parse_raw_csv(text.as_bytes()).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!((recs[0].subject_id.as_str(), recs[0].len()), ("s01", 40));
    assert_eq!((recs[1].subject_id.as_str(), recs[1].len()), ("s02", 25));
    for r in &recs {
        assert!((r.sample_rate_hz - 5.2).abs() <= 1e-6);
        assert_eq!(r.channels.len(), 8);
        r.validate().unwrap();
    }
    assert_eq!(recs[0].channels[2][10], 10.0 * 3.0 * 0.01);
    // Unlabeled rows are kept; labeled rows all survive.
    let labeled_rows = text.lines().skip(1).filter(|l| !l.ends_with(",-1")).count();
    assert_eq!(recs.iter().map(|r| r.labeled_len()).sum::<usize>(), labeled_rows);
    assert_eq!(recs[0].labels[0], -1);
}

#[test]
fn csv_errors_name_the_problem() {
    let missing = "subject,t,c1,c2,c3,c4,c5,c6,c7,label\ns,0,1,1,1,1,1,1,1,0\n";
    match parse_raw_csv(missing.as_bytes()) {
        Err(Error::Schema(msg)) => assert!(msg.contains("c8"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let mut bad = csv_text(&[("s", 6)], 0.2);
    bad = bad.replacen("s,0.4,", "s,0.4x,", 1);
    match parse_raw_csv(bad.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    let bad_label = csv_text(&[("s", 6)], 0.2).replace(",-1\n", ",7\n");
    assert!(matches!(
        parse_raw_csv(bad_label.as_bytes()),
        Err(Error::Parse { line: 2, .. })
    ));
    let short_row = "subject,t,c1,c2,c3,c4,c5,c6,c7,c8,label\ns,0,1,1,1,1,1,1,1,1,0\ns,1,1\n";
    assert!(matches!(
        parse_raw_csv(short_row.as_bytes()),
        Err(Error::Parse { line: 3, .. })
    ));
    let jitter = csv_text(&[("s", 6)], 0.2).replacen("s,0.6000000000000001,", "s,0.6001,", 1);
    assert!(
        matches!(parse_raw_csv(jitter.as_bytes()), Err(Error::Schema(_))),
        "{jitter}"
    );
    let backwards = csv_text(&[("s", 6)], 0.2).replacen("s,0.4,", "s,0.1,", 1);
    assert!(matches!(parse_raw_csv(backwards.as_bytes()), Err(Error::Parse { .. })));
    assert!(matches!(read_raw_csv("/nonexistent/raw.csv"), Err(Error::Io { .. })));
}

#[test]
fn sampling_tolerance_is_one_microsecond() {
    let fine = csv_text(&[("s", 6)], 0.2).replacen("s,0.4,", "s,0.4000005,", 1);
    assert!(parse_raw_csv(fine.as_bytes()).is_ok());
}

fn random_windows(seed: u64, n: usize, c: usize, l: usize) -> WindowDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = WindowDataset::empty(c, l, 5.2, 3);
    for i in 0..n {
        let w: Vec<f64> = (0..c * l).map(|_| rng.random_range(-1e3..1e3)).collect();
        d.push(&w, (i % 4) as u8, &format!("s{}", i % 3)).unwrap();
    }
    d
}

#[test]
fn windows_file_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = random_windows(1, 25, 8, 150);
    let p1 = dir.path().join("a.fnwin");
    let p2 = dir.path().join("b.fnwin");
    write_windows(&p1, &d, serde_json::json!({"note": "x"})).unwrap();
    let back = read_windows(&p1).unwrap();
    assert_eq!(back.subjects, d.subjects);
    assert_eq!(back.stride_samples, 3);
    assert_eq!(back.labels, d.labels);
    write_windows(&p2, &back, serde_json::json!({"note": "x"})).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(
        std::fs::read(p1.with_extension("fnwin.json")).unwrap(),
        std::fs::read(p2.with_extension("fnwin.json")).unwrap()
    );
}

#[test]
fn corrupted_windows_files_are_rejected() {
    let d = random_windows(2, 4, 2, 10);
    let bytes = encode_windows(&d).unwrap();
    let mut flipped = bytes.clone();
    flipped[40] ^= 0x10;
    assert!(matches!(decode_windows(&flipped), Err(Error::Format { msg, .. }) if msg.contains("CRC")));
    assert!(matches!(
        decode_windows(&bytes[..bytes.len() - 1]),
        Err(Error::Format { .. })
    ));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(decode_windows(&magic), Err(Error::Format { offset: 0, .. })));
    assert!(decode_windows(&[]).is_err());
}

#[test]
fn ten_thousand_windows_within_f32_quantization() {
    let d = random_windows(3, 10_000, 8, 150);
    let back = decode_windows(&encode_windows(&d).unwrap()).unwrap();
    assert_eq!(back.len(), 10_000);
    for (a, b) in d.values.iter().zip(&back.values) {
        // Round to nearest f32: relative error at most 2^-24 for normal values.
        let bound = (a.abs() * f64::powi(2.0, -24)).max(f64::from(f32::from_bits(1)) / 2.0);
        assert!((a - b).abs() <= bound, "{a} {b}");
    }
    assert_eq!(encode_windows(&back).unwrap(), encode_windows(&d).unwrap());
}

fn mutate(rng: &mut ChaCha8Rng, bytes: &[u8]) -> Vec<u8> {
    let mut m = bytes.to_vec();
    match rng.random_range(0..4) {
        0 => {
            let i = rng.random_range(0..m.len());
            m[i] ^= 1 << rng.random_range(0..8);
        }
        1 => m.truncate(rng.random_range(0..m.len())),
        2 => {
            let i = rng.random_range(0..m.len());
            m[i] = rng.random();
        }
        _ => {
            let i = rng.random_range(0..=m.len());
            m.insert(i, rng.random());
        }
    }
    m
}

#[test]
fn fuzzed_files_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let windows = encode_windows(&random_windows(4, 6, 3, 12)).unwrap();
    let mut cfg = ModelConfig::default();
    cfg.input_length = 8;
    cfg.lstm_hidden = 4;
    cfg.fc_hidden = 5;
    let weights = encode_weights(&build_model(&cfg, 1).unwrap());
    for _ in 0..1000 {
        let m = mutate(&mut rng, &windows);
        if let Ok(d) = decode_windows(&m) {
            assert_eq!(encode_windows(&d).unwrap(), m);
        }
        let m = mutate(&mut rng, &weights);
        let _ = decode_weights(&m);
    }
}

#[test]
fn synth_is_deterministic_and_balanced() {
    let cfg = SynthConfig {
        windows_per_class: 20,
        ..SynthConfig::default()
    };
    let a = synth_generate(&cfg).unwrap();
    let b = synth_generate(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.class_counts(4), vec![20; 4]);
    assert_eq!((a.channels, a.length), (8, 150));
    a.validate(4).unwrap();
    let c = synth_generate(&SynthConfig { seed: 7, ..cfg.clone() }).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn synth_rejects_tones_at_or_above_nyquist() {
    // Class 8 would sit at 2.7 Hz > 2.6 Hz.
    let cfg = SynthConfig {
        classes: 9,
        ..SynthConfig::default()
    };
    assert!(matches!(synth_generate(&cfg), Err(Error::Param(_))));
    let cfg = SynthConfig {
        classes: 4,
        sample_rate_hz: 2.4,
        bandpass: false,
        ..SynthConfig::default()
    };
    assert!(matches!(synth_generate(&cfg), Err(Error::Param(_))));
}

/// Energy at each class tone, summed over channels; predicts the strongest.
fn energy_detector(d: &WindowDataset, cfg: &SynthConfig) -> Vec<usize> {
    (0..d.len())
        .map(|i| {
            let w = d.window(i);
            let energy = |c: usize| -> f64 {
                let omega = 2.0 * PI * cfg.tone_hz(c) / cfg.sample_rate_hz;
                w.chunks(d.length)
                    .map(|ch| {
                        let (mut re, mut im) = (0.0, 0.0);
                        for (n, v) in ch.iter().enumerate() {
                            re += v * (omega * n as f64).cos();
                            im += v * (omega * n as f64).sin();
                        }
                        re * re + im * im
                    })
                    .sum()
            };
            (0..cfg.classes)
                .max_by(|&a, &b| energy(a).total_cmp(&energy(b)))
                .unwrap()
        })
        .collect()
}

/// The bandpass is linear, so every filtered tone of frequency f lies in
/// span{F(sin ωn), F(cos ωn)}. Scores each class by the fraction of window
/// energy inside its span.
fn matched_subspace_detector(d: &WindowDataset, cfg: &SynthConfig) -> Vec<usize> {
    let f = design_butterworth_bandpass(cfg.filter_order, cfg.low_hz, cfg.high_hz, cfg.sample_rate_hz).unwrap();
    let bases: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.classes)
        .map(|c| {
            let omega = 2.0 * PI * cfg.tone_hz(c) / cfg.sample_rate_hz;
            let s: Vec<f64> = (0..d.length).map(|n| (omega * n as f64).sin()).collect();
            let co: Vec<f64> = (0..d.length).map(|n| (omega * n as f64).cos()).collect();
            (filtfilt(&f, &s).unwrap(), filtfilt(&f, &co).unwrap())
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    (0..d.len())
        .map(|i| {
            let w = d.window(i);
            let captured = |c: usize| -> f64 {
                let (s, co) = &bases[c];
                let (g11, g12, g22) = (dot(s, s), dot(s, co), dot(co, co));
                let det = g11 * g22 - g12 * g12;
                w.chunks(d.length)
                    .map(|ch| {
                        let (b1, b2) = (dot(s, ch), dot(co, ch));
                        (g22 * b1 * b1 - 2.0 * g12 * b1 * b2 + g11 * b2 * b2) / det / dot(ch, ch)
                    })
                    .sum()
            };
            (0..cfg.classes)
                .max_by(|&a, &b| captured(a).total_cmp(&captured(b)))
                .unwrap()
        })
        .collect()
}

#[test]
fn noise_free_tones_are_separable_by_energy() {
    for bandpass in [true, false] {
        let cfg = SynthConfig {
            windows_per_class: 30,
            snr_db: f64::INFINITY,
            bandpass,
            ..SynthConfig::default()
        };
        let d = synth_generate(&cfg).unwrap();
        let pred = if bandpass {
            matched_subspace_detector(&d, &cfg)
        } else {
            energy_detector(&d, &cfg)
        };
        let correct = pred.iter().zip(&d.labels).filter(|(p, l)| **p == **l as usize).count();
        assert_eq!(correct, d.len(), "bandpass {bandpass}");
    }
}
