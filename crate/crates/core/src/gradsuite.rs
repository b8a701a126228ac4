//! Finite-difference checks over every layer and a tiny full model.
//!
//! Each layer is reduced to a scalar with a fixed random upstream tensor,
//! `loss = Σ r ∘ layer(x)`, so the analytic gradient under test is the
//! layer's backward rule applied to `r`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::init::{init_conv, init_linear};
use crate::engine::{
    conv1d_backward, conv1d_forward, finite_diff_gradcheck, linear_backward, linear_forward, lstm_cell_backward,
    lstm_cell_forward, lstm_layer_backward, lstm_layer_forward, maxpool1d, maxpool1d_backward, relu, relu_backward,
    softmax_cross_entropy, ConvParams, GradCheckConfig, GradCheckReport, GradTarget, LinearParams, LstmParams,
    ParamSet,
};
use crate::error::Result;
use crate::model::{backward, build_model, forward, forward_train, LstmInputMode, ModelConfig, ModelWeights};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub step: f64,
    pub layer_tolerance: f64,
    pub model_tolerance: f64,
    /// Entries sampled per tensor in the full-model checks.
    pub model_entries: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            step: 1e-5,
            layer_tolerance: 1e-6,
            model_tolerance: 1e-4,
            model_entries: 48,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub check: String,
    pub report: GradCheckReport,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::uniform(shape, 1.0, rng)
}

fn weighted_sum(r: &Tensor, y: &Tensor) -> Result<f64> {
    r.dot(y)
}

fn param_targets<P: ParamSet>(prefix: &str, p: &P, g: &P) -> Vec<GradTarget> {
    p.named()
        .into_iter()
        .zip(g.named())
        .map(|((n, v), (_, a))| GradTarget::new(format!("{prefix}{n}"), v.clone(), a.clone()))
        .collect()
}

fn load<P: ParamSet>(p: &mut P, values: &[Tensor]) {
    for ((_, slot), v) in p.named_mut().into_iter().zip(values) {
        *slot = v.clone();
    }
}

fn random_lstm(input: usize, hidden: usize, peephole: bool, rng: &mut ChaCha8Rng) -> LstmParams {
    let mut p = LstmParams::zeros(input, hidden, peephole);
    for (_, t) in p.named_mut() {
        *t = rand_tensor(t.shape(), rng);
    }
    p
}

pub fn check_conv(cfg: &SuiteConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = rand_tensor(&[2, 3, 8], &mut rng);
    let mut p = init_conv(3, 4, 3, &mut rng);
    p.bias = rand_tensor(&[4], &mut rng);
    let r = rand_tensor(&[2, 4, 8], &mut rng);
    let g = conv1d_backward(&x, &p, &r)?;
    let mut targets = param_targets("", &p, &g.params);
    targets.push(GradTarget::new("x", x, g.input));
    let padding = p.padding;
    finite_diff_gradcheck(
        &targets,
        |v| {
            let q = ConvParams {
                weight: v[0].clone(),
                bias: v[1].clone(),
                padding,
            };
            weighted_sum(&r, &conv1d_forward(&v[2], &q)?)
        },
        &layer_cfg(cfg),
    )
}

pub fn check_relu(cfg: &SuiteConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = rand_tensor(&[2, 3, 8], &mut rng);
    let r = rand_tensor(&[2, 3, 8], &mut rng);
    let skip = x.data().iter().map(|v| v.abs() < 1e-3).collect();
    let target = GradTarget::new("x", x.clone(), relu_backward(&x, &r)?).skipping(skip);
    finite_diff_gradcheck(&[target], |v| weighted_sum(&r, &relu(&v[0])), &layer_cfg(cfg))
}

pub fn check_maxpool(cfg: &SuiteConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = 2;
    let x = rand_tensor(&[2, 3, 9], &mut rng);
    let (y, idx) = maxpool1d(&x, pool)?;
    let r = rand_tensor(y.shape(), &mut rng);
    // Windows whose two largest entries nearly tie are not differentiable at
    // the probe scale.
    let len = x.dim(2);
    let mut skip = vec![false; x.len()];
    for row in 0..x.dim(0) * x.dim(1) {
        for w in 0..len / pool {
            let start = row * len + w * pool;
            let mut vals: Vec<f64> = x.data()[start..start + pool].to_vec();
            vals.sort_by(|a, b| b.total_cmp(a));
            if vals.len() > 1 && vals[0] - vals[1] < 1e-3 {
                skip[start..start + pool].iter_mut().for_each(|s| *s = true);
            }
        }
    }
    let target = GradTarget::new("x", x, maxpool1d_backward(&idx, &r)?).skipping(skip);
    finite_diff_gradcheck(
        &[target],
        |v| weighted_sum(&r, &maxpool1d(&v[0], pool)?.0),
        &layer_cfg(cfg),
    )
}

pub fn check_linear(cfg: &SuiteConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = rand_tensor(&[4, 5], &mut rng);
    let mut p = init_linear(5, 3, &mut rng);
    p.bias = rand_tensor(&[3], &mut rng);
    let r = rand_tensor(&[4, 3], &mut rng);
    let g = linear_backward(&x, &p, &r)?;
    let mut targets = param_targets("", &p, &g.params);
    targets.push(GradTarget::new("x", x, g.input));
    finite_diff_gradcheck(
        &targets,
        |v| {
            let q = LinearParams {
                weight: v[0].clone(),
                bias: v[1].clone(),
            };
            weighted_sum(&r, &linear_forward(&v[2], &q)?)
        },
        &layer_cfg(cfg),
    )
}

pub fn check_lstm_cell(cfg: &SuiteConfig, peephole: bool) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (batch, input, hidden) = (2, 6, 4);
    let p = random_lstm(input, hidden, peephole, &mut rng);
    let x = rand_tensor(&[batch, input], &mut rng);
    let h0 = rand_tensor(&[batch, hidden], &mut rng);
    let c0 = rand_tensor(&[batch, hidden], &mut rng);
    let rh = rand_tensor(&[batch, hidden], &mut rng);
    let rc = rand_tensor(&[batch, hidden], &mut rng);
    let (_, _, cache) = lstm_cell_forward(&x, &h0, &c0, &p)?;
    let g = lstm_cell_backward(&cache, &rh, &rc, &p)?;
    let mut targets = param_targets("", &p, &g.bundle.params);
    let np = targets.len();
    targets.push(GradTarget::new("x", x, g.bundle.input));
    targets.push(GradTarget::new("h_prev", h0, g.h_prev));
    targets.push(GradTarget::new("c_prev", c0, g.c_prev));
    let mut q = p.clone();
    finite_diff_gradcheck(
        &targets,
        |v| {
            load(&mut q, &v[..np]);
            let (h, c, _) = lstm_cell_forward(&v[np], &v[np + 1], &v[np + 2], &q)?;
            Ok(weighted_sum(&rh, &h)? + weighted_sum(&rc, &c)?)
        },
        &layer_cfg(cfg),
    )
}

pub fn check_lstm_layer(cfg: &SuiteConfig, steps: usize) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (batch, input, hidden) = (2, 6, 4);
    let p = random_lstm(input, hidden, true, &mut rng);
    let x = rand_tensor(&[batch, steps, input], &mut rng);
    let r = rand_tensor(&[batch, hidden], &mut rng);
    let (_, cache) = lstm_layer_forward(&x, &p)?;
    let g = lstm_layer_backward(&cache, &r, &p)?;
    let mut targets = param_targets("", &p, &g.params);
    let np = targets.len();
    targets.push(GradTarget::new("x_seq", x, g.input));
    let mut q = p.clone();
    finite_diff_gradcheck(
        &targets,
        |v| {
            load(&mut q, &v[..np]);
            weighted_sum(&r, &lstm_layer_forward(&v[np], &q)?.0)
        },
        &layer_cfg(cfg),
    )
}

pub fn check_softmax_ce(cfg: &SuiteConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let logits = Tensor::uniform(&[3, 4], 2.0, &mut rng);
    let labels: Vec<usize> = (0..3).map(|_| rng.random_range(0..4)).collect();
    let (_, g) = softmax_cross_entropy(&logits, &labels)?;
    finite_diff_gradcheck(
        &[GradTarget::new("logits", logits, g)],
        |v| softmax_cross_entropy(&v[0], &labels).map(|(l, _)| l),
        &layer_cfg(cfg),
    )
}

/// Cross-entropy gradient of a randomly initialised model at `input_length`
/// samples, checked on a seeded sample of entries per tensor.
pub fn check_model(cfg: &SuiteConfig, model: &ModelConfig, tolerance: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = build_model(model, cfg.seed)?;
    // Non-zero biases and peepholes so their gradients are exercised.
    for (name, t) in w.named_mut() {
        if name.ends_with(".b") || name.contains(".b_") || name.contains(".Z_") {
            *t = Tensor::uniform(t.shape(), 0.5, &mut rng);
        }
    }
    let batch = 2;
    let x = rand_tensor(&[batch, model.input_channels, model.input_length], &mut rng);
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..model.classes)).collect();
    let (logits, cache) = forward_train(&w, model, &x)?;
    let (_, dlogits) = softmax_cross_entropy(&logits, &labels)?;
    let g = backward(&w, model, &cache, &dlogits)?;
    let targets = param_targets("", &w, &g);
    let mut q: ModelWeights = w.clone();
    let check = GradCheckConfig {
        step: cfg.step,
        tolerance,
        max_entries: Some(cfg.model_entries),
        seed: cfg.seed,
    };
    finite_diff_gradcheck(
        &targets,
        |v| {
            load(&mut q, v);
            softmax_cross_entropy(&forward(&q, model, &x)?, &labels).map(|(l, _)| l)
        },
        &check,
    )
}

/// The tiny model configuration used for whole-network checks.
pub fn tiny_model(mode: LstmInputMode) -> ModelConfig {
    ModelConfig {
        input_length: 8,
        lstm_input_mode: mode,
        ..Default::default()
    }
}

fn layer_cfg(cfg: &SuiteConfig) -> GradCheckConfig {
    GradCheckConfig {
        step: cfg.step,
        tolerance: cfg.layer_tolerance,
        max_entries: None,
        seed: cfg.seed,
    }
}

/// Runs every check. Layers use `layer_tolerance`; the CNN-LSTM model uses
/// `model_tolerance`; the CNN-only model is held to `layer_tolerance`.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    let mut push = |check: &str, report: GradCheckReport| {
        out.push(SuiteEntry {
            check: check.to_string(),
            report,
        })
    };
    push("conv1d", check_conv(cfg)?);
    push("relu", check_relu(cfg)?);
    push("maxpool1d", check_maxpool(cfg)?);
    push("linear", check_linear(cfg)?);
    push("lstm_cell_peephole", check_lstm_cell(cfg, true)?);
    push("lstm_cell_no_peephole", check_lstm_cell(cfg, false)?);
    push("lstm_layer_T5", check_lstm_layer(cfg, 5)?);
    push("softmax_cross_entropy", check_softmax_ce(cfg)?);
    push(
        "model_cnn_lstm_flat_L8",
        check_model(cfg, &tiny_model(LstmInputMode::FlatSingleStep), cfg.model_tolerance)?,
    );
    push(
        "model_cnn_only_L8",
        check_model(
            cfg,
            &tiny_model(LstmInputMode::FlatSingleStep).cnn_only(),
            cfg.layer_tolerance,
        )?,
    );
    Ok(out)
}
