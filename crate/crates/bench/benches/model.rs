use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use fnwl_core::engine::softmax_cross_entropy;
use fnwl_core::model::{backward, build_model, forward_train, LstmInputMode, ModelConfig};
use fnwl_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn batch(cfg: &ModelConfig, n: usize) -> (Tensor, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Tensor::uniform(&[n, cfg.input_channels, cfg.input_length], 1.0, &mut rng);
    let labels = (0..n).map(|i| i % cfg.classes).collect();
    (x, labels)
}

fn bench_model(c: &mut Criterion) {
    for (name, cfg) in [
        ("cnn_lstm_flat", ModelConfig::default()),
        (
            "cnn_lstm_seq",
            ModelConfig {
                lstm_input_mode: LstmInputMode::SequenceTBy32,
                ..ModelConfig::default()
            },
        ),
        ("cnn_only", ModelConfig::default().cnn_only()),
    ] {
        let w = build_model(&cfg, 42).unwrap();
        let (x, labels) = batch(&cfg, 64);
        c.bench_function(&format!("{name}/forward_b64"), |b| {
            b.iter(|| forward_train(black_box(&w), &cfg, black_box(&x)).unwrap())
        });
        c.bench_function(&format!("{name}/forward_backward_b64"), |b| {
            b.iter_batched(
                || (),
                |_| {
                    let (logits, cache) = forward_train(&w, &cfg, &x).unwrap();
                    let (_, dlogits) = softmax_cross_entropy(&logits, &labels).unwrap();
                    backward(&w, &cfg, &cache, &dlogits).unwrap()
                },
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_model
}
criterion_main!(benches);
