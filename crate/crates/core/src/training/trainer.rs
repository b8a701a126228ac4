use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::log::{EpochRecord, TrainLog};
use crate::dataset::WindowDataset;
use crate::engine::{softmax_cross_entropy, ParamSet};
use crate::error::{Error, Result};
use crate::model::{argmax_rows, backward, forward, forward_train, ModelConfig, ModelWeights};

/// Stream of the seeded generator reserved for epoch shuffles.
pub const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub shuffle: bool,
    /// Rescale the whole gradient to this L2 norm when it is larger.
    pub grad_clip: Option<f64>,
    /// Record wall time per epoch; off writes 0 so logs compare byte for byte.
    pub record_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 1000,
            batch_size: 64,
            seed: 42,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shuffle: true,
            grad_clip: None,
            record_time: true,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("gradient clip {c} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    pub log: TrainLog,
    pub optimizer: AdamState,
}

fn clip_gradients(grads: &mut ModelWeights, max_norm: f64) {
    let norm = grads
        .named()
        .iter()
        .map(|(_, t)| t.data().iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for (_, t) in grads.named_mut() {
            t.scale(scale);
        }
    }
}

/// Fraction of `data` classified correctly, evaluated in chunks of `batch`.
pub fn accuracy(weights: &ModelWeights, cfg: &ModelConfig, data: &WindowDataset, batch: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Metric("accuracy of an empty dataset".into()));
    }
    let mut correct = 0;
    let all: Vec<usize> = (0..data.len()).collect();
    for chunk in all.chunks(batch.max(1)) {
        let logits = forward(weights, cfg, &data.batch(chunk))?;
        correct += argmax_rows(&logits)
            .iter()
            .zip(chunk)
            .filter(|(p, &i)| **p == data.labels[i] as usize)
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

pub fn train(
    weights: ModelWeights,
    model: &ModelConfig,
    train_set: &WindowDataset,
    test_set: Option<&WindowDataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(weights, model, train_set, test_set, cfg, |_| {})
}

/// Mini-batch Adam training. `on_epoch` sees each record as it is appended.
///
/// Each epoch draws one permutation of the training windows from a generator
/// seeded with `cfg.seed` on [`SHUFFLE_STREAM`], then visits the batches in
/// order with the last batch possibly short.
pub fn train_with(
    mut weights: ModelWeights,
    model: &ModelConfig,
    train_set: &WindowDataset,
    test_set: Option<&WindowDataset>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    weights.check_config(model)?;
    if train_set.is_empty() {
        return Err(Error::Split("training split is empty".into()));
    }
    if train_set.channels != model.input_channels || train_set.length != model.input_length {
        return Err(Error::dim(
            "train",
            &[model.input_channels, model.input_length],
            &[train_set.channels, train_set.length],
        ));
    }
    train_set.validate(model.classes)?;
    if let Some(t) = test_set {
        t.validate(model.classes)?;
    }

    let adam = cfg.adam();
    let mut state = AdamState::new(&weights);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = TrainLog::default();
    let labels = train_set.labels_usize();

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let x = train_set.batch(batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (logits, cache) = forward_train(&weights, model, &x)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            loss_sum += loss * batch.len() as f64;
            correct += argmax_rows(&logits).iter().zip(&y).filter(|(p, t)| p == t).count();
            let mut grads = backward(&weights, model, &cache, &dlogits)?;
            if let Some(c) = cfg.grad_clip {
                clip_gradients(&mut grads, c);
            }
            adam_step(&mut weights, &grads, &mut state, &adam).map_err(|e| match e {
                Error::NonFinite(what) => Error::NonFinite(format!("{what} at epoch {epoch}, batch {}", b + 1)),
                other => other,
            })?;
        }
        let test_acc = test_set
            .filter(|t| !t.is_empty())
            .map(|t| accuracy(&weights, model, t, cfg.batch_size))
            .transpose()?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            test_acc,
            seconds: if cfg.record_time {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        log::debug!(
            "epoch {epoch}: loss {:.5} train {:.4} test {:?}",
            record.train_loss,
            record.train_acc,
            record.test_acc
        );
        on_epoch(&record);
        log.records.push(record);
    }
    Ok(TrainOutcome {
        weights,
        log,
        optimizer: state,
    })
}
