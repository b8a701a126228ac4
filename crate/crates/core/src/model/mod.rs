//! The CNN-LSTM classifier and its CNN-only ablation.
//!
//! Layer stack, with the default sizes:
//!
//! | layer     | input          | output         |
//! |-----------|----------------|----------------|
//! | Conv1d    | (BS, 8, L)     | (BS, 16, L)    |
//! | Relu      | (BS, 16, L)    | (BS, 16, L)    |
//! | MaxPool1d | (BS, 16, L)    | (BS, 16, L/2)  |
//! | Conv1d    | (BS, 16, L/2)  | (BS, 32, L/2)  |
//! | Relu      | (BS, 32, L/2)  | (BS, 32, L/2)  |
//! | MaxPool1d | (BS, 32, L/2)  | (BS, 32, L/4)  |
//! | Flatten   | (BS, 32, L/4)  | (BS, 32·L/4)   |
//! | LSTM      | (BS, 32·L/4)   | (BS, 64)       |
//! | LSTM      | (BS, 64)       | (BS, 64)       |
//! | Linear    | (BS, 64)       | (BS, 128)      |
//! | Relu      | (BS, 128)      | (BS, 128)      |
//! | Linear    | (BS, 128)      | (BS, 4)        |
//!
//! Divisions floor. The CNN-only variant drops both LSTM rows and feeds the
//! flattened features to the first linear layer.

pub(crate) mod io;

pub use io::{
    decode_weights, encode_weights, load_weights, save_weights, sidecar_path, weights_from_named, WeightsSidecar,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::init::{init_conv, init_linear, init_lstm};
use crate::engine::{
    conv1d_backward, conv1d_forward, linear_backward, linear_forward, lstm_layer_backward, lstm_layer_forward,
    maxpool1d, maxpool1d_backward, relu, relu_backward, ConvParams, LinearParams, LstmLayerCache, LstmParams, ParamSet,
    PoolIndices,
};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// How the flattened convolutional features enter the first LSTM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LstmInputMode {
    /// The whole `32·L/4` vector as a single time step.
    FlatSingleStep,
    /// `L/4` time steps of the 32 conv channels.
    #[serde(rename = "sequence_T_by_32")]
    SequenceTBy32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CnnLstm,
    CnnOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_channels: usize,
    pub input_length: usize,
    pub conv1_out: usize,
    pub conv2_out: usize,
    pub kernel: usize,
    pub pool: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub fc_hidden: usize,
    pub classes: usize,
    pub lstm_input_mode: LstmInputMode,
    pub variant: Variant,
    pub peephole: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_channels: 8,
            input_length: 150,
            conv1_out: 16,
            conv2_out: 32,
            kernel: 3,
            pool: 2,
            lstm_hidden: 64,
            lstm_layers: 2,
            fc_hidden: 128,
            classes: 4,
            lstm_input_mode: LstmInputMode::FlatSingleStep,
            variant: Variant::CnnLstm,
            peephole: true,
        }
    }
}

impl ModelConfig {
    pub fn cnn_only(mut self) -> Self {
        self.variant = Variant::CnnOnly;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_channels", self.input_channels),
            ("conv1_out", self.conv1_out),
            ("conv2_out", self.conv2_out),
            ("pool", self.pool),
            ("lstm_hidden", self.lstm_hidden),
            ("fc_hidden", self.fc_hidden),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel must be odd for same padding, got {}",
                self.kernel
            )));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", self.classes)));
        }
        if self.pooled_length() == 0 || self.input_length < 4 {
            return Err(Error::Config(format!(
                "input length {} leaves nothing after two pooling stages of {}",
                self.input_length, self.pool
            )));
        }
        if self.variant == Variant::CnnLstm && self.lstm_layers == 0 {
            return Err(Error::Config("cnn_lstm needs at least one LSTM layer".into()));
        }
        Ok(())
    }

    /// Temporal length after both pooling stages.
    pub fn pooled_length(&self) -> usize {
        if self.pool == 0 {
            return 0;
        }
        self.input_length / self.pool / self.pool
    }

    /// Width of the flattened convolutional features.
    pub fn flat_features(&self) -> usize {
        self.conv2_out * self.pooled_length()
    }

    pub fn lstm_input_dim(&self) -> usize {
        match self.lstm_input_mode {
            LstmInputMode::FlatSingleStep => self.flat_features(),
            LstmInputMode::SequenceTBy32 => self.conv2_out,
        }
    }

    pub fn fc1_input_dim(&self) -> usize {
        match self.variant {
            Variant::CnnLstm => self.lstm_hidden,
            Variant::CnnOnly => self.flat_features(),
        }
    }
}

/// Every trainable tensor of the network, named `conv1.W`, `lstm1.U_i`, ….
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub conv1: ConvParams,
    pub conv2: ConvParams,
    /// Empty for the CNN-only variant.
    pub lstm: Vec<LstmParams>,
    pub fc1: LinearParams,
    pub fc2: LinearParams,
}

impl ModelWeights {
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let lstm = match cfg.variant {
            Variant::CnnOnly => Vec::new(),
            Variant::CnnLstm => (0..cfg.lstm_layers)
                .map(|l| {
                    let input = if l == 0 { cfg.lstm_input_dim() } else { cfg.lstm_hidden };
                    LstmParams::zeros(input, cfg.lstm_hidden, cfg.peephole)
                })
                .collect(),
        };
        Ok(ModelWeights {
            conv1: ConvParams::zeros(cfg.input_channels, cfg.conv1_out, cfg.kernel),
            conv2: ConvParams::zeros(cfg.conv1_out, cfg.conv2_out, cfg.kernel),
            lstm,
            fc1: LinearParams::zeros(cfg.fc1_input_dim(), cfg.fc_hidden),
            fc2: LinearParams::zeros(cfg.fc_hidden, cfg.classes),
        })
    }

    /// Checks every tensor shape against `cfg`.
    pub fn check_config(&self, cfg: &ModelConfig) -> Result<()> {
        let want = ModelWeights::zeros(cfg)?;
        let have = self.named();
        let expected = want.named();
        if have.len() != expected.len() {
            return Err(Error::Config(format!(
                "weights hold {} tensors, configuration needs {}",
                have.len(),
                expected.len()
            )));
        }
        for ((hn, ht), (en, et)) in have.iter().zip(&expected) {
            if hn != en || ht.shape() != et.shape() {
                return Err(Error::Config(format!(
                    "tensor {hn} {:?} does not match expected {en} {:?}",
                    ht.shape(),
                    et.shape()
                )));
            }
        }
        Ok(())
    }
}

fn prefixed<'a, P: ParamSet>(prefix: &str, p: &'a P, out: &mut Vec<(String, &'a Tensor)>) {
    out.extend(p.named().into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)));
}

fn prefixed_mut<'a, P: ParamSet>(prefix: &str, p: &'a mut P, out: &mut Vec<(String, &'a mut Tensor)>) {
    out.extend(p.named_mut().into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)));
}

impl ParamSet for ModelWeights {
    fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        prefixed("conv1", &self.conv1, &mut out);
        prefixed("conv2", &self.conv2, &mut out);
        for (l, p) in self.lstm.iter().enumerate() {
            prefixed(&format!("lstm{}", l + 1), p, &mut out);
        }
        prefixed("fc1", &self.fc1, &mut out);
        prefixed("fc2", &self.fc2, &mut out);
        out
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        prefixed_mut("conv1", &mut self.conv1, &mut out);
        prefixed_mut("conv2", &mut self.conv2, &mut out);
        for (l, p) in self.lstm.iter_mut().enumerate() {
            prefixed_mut(&format!("lstm{}", l + 1), p, &mut out);
        }
        prefixed_mut("fc1", &mut self.fc1, &mut out);
        prefixed_mut("fc2", &mut self.fc2, &mut out);
        out
    }
}

/// Seeded initialisation; draws go conv1, conv2, lstm1.., fc1, fc2 from a
/// single ChaCha8 stream.
pub fn build_model(cfg: &ModelConfig, seed: u64) -> Result<ModelWeights> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conv1 = init_conv(cfg.input_channels, cfg.conv1_out, cfg.kernel, &mut rng);
    let conv2 = init_conv(cfg.conv1_out, cfg.conv2_out, cfg.kernel, &mut rng);
    let lstm = match cfg.variant {
        Variant::CnnOnly => Vec::new(),
        Variant::CnnLstm => (0..cfg.lstm_layers)
            .map(|l| {
                let input = if l == 0 { cfg.lstm_input_dim() } else { cfg.lstm_hidden };
                init_lstm(input, cfg.lstm_hidden, cfg.peephole, &mut rng)
            })
            .collect(),
    };
    let fc1 = init_linear(cfg.fc1_input_dim(), cfg.fc_hidden, &mut rng);
    let fc2 = init_linear(cfg.fc_hidden, cfg.classes, &mut rng);
    Ok(ModelWeights {
        conv1,
        conv2,
        lstm,
        fc1,
        fc2,
    })
}

pub fn build_cnn_only(cfg: &ModelConfig, seed: u64) -> Result<ModelWeights> {
    build_model(&cfg.clone().cnn_only(), seed)
}

/// One row of the layer/shape table recorded during a forward pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerShape {
    pub layer: &'static str,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
}

/// Intermediates kept by a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor,
    conv1_out: Tensor,
    pool1: PoolIndices,
    pool1_out: Tensor,
    conv2_out: Tensor,
    pool2: PoolIndices,
    pooled_shape: Vec<usize>,
    flat: Tensor,
    lstm: Vec<LstmLayerCache>,
    fc1_in: Tensor,
    fc1_out: Tensor,
    fc2_in: Tensor,
    shapes: Vec<LayerShape>,
}

impl ForwardCache {
    pub fn shape_table(&self) -> &[LayerShape] {
        &self.shapes
    }
}

fn check_input(cfg: &ModelConfig, x: &Tensor) -> Result<()> {
    if x.rank() != 3 || x.dim(1) != cfg.input_channels || x.dim(2) != cfg.input_length {
        return Err(Error::dim(
            "model input",
            &[
                x.shape().first().copied().unwrap_or(0),
                cfg.input_channels,
                cfg.input_length,
            ],
            x.shape(),
        ));
    }
    Ok(())
}

/// `[BS, C, T]` → `[BS, T, C]`
fn channels_last(x: &Tensor) -> Tensor {
    let (b, c, t) = (x.dim(0), x.dim(1), x.dim(2));
    let mut out = vec![0.0; x.len()];
    let d = x.data();
    for bi in 0..b {
        for ci in 0..c {
            for ti in 0..t {
                out[(bi * t + ti) * c + ci] = d[(bi * c + ci) * t + ti];
            }
        }
    }
    Tensor::new(&[b, t, c], out).expect("transpose shape")
}

/// `[BS, T, C]` → `[BS, C, T]`
fn channels_first(x: &Tensor) -> Tensor {
    let (b, t, c) = (x.dim(0), x.dim(1), x.dim(2));
    let mut out = vec![0.0; x.len()];
    let d = x.data();
    for bi in 0..b {
        for ti in 0..t {
            for ci in 0..c {
                out[(bi * c + ci) * t + ti] = d[(bi * t + ti) * c + ci];
            }
        }
    }
    Tensor::new(&[b, c, t], out).expect("transpose shape")
}

/// Training-mode forward pass returning logits `[BS, classes]` and the cache
/// for [`backward`].
pub fn forward_train(w: &ModelWeights, cfg: &ModelConfig, x: &Tensor) -> Result<(Tensor, ForwardCache)> {
    check_input(cfg, x)?;
    let batch = x.dim(0);
    let mut shapes = Vec::with_capacity(12);
    let mut row = |layer, input: &Tensor, output: &Tensor| {
        shapes.push(LayerShape {
            layer,
            input: input.shape().to_vec(),
            output: output.shape().to_vec(),
        })
    };

    let conv1_out = conv1d_forward(x, &w.conv1)?;
    row("Conv1d", x, &conv1_out);
    let a1 = relu(&conv1_out);
    row("Relu", &conv1_out, &a1);
    let (pool1_out, pool1) = maxpool1d(&a1, cfg.pool)?;
    row("MaxPool1d", &a1, &pool1_out);

    let conv2_out = conv1d_forward(&pool1_out, &w.conv2)?;
    row("Conv1d", &pool1_out, &conv2_out);
    let a2 = relu(&conv2_out);
    row("Relu", &conv2_out, &a2);
    let (pooled, pool2) = maxpool1d(&a2, cfg.pool)?;
    row("MaxPool1d", &a2, &pooled);

    let pooled_shape = pooled.shape().to_vec();
    let features = pooled.len() / batch.max(1);
    let flat = pooled.clone().reshape(&[batch, features])?;
    row("Flatten", &pooled, &flat);

    let mut lstm = Vec::with_capacity(w.lstm.len());
    let fc1_in = if w.lstm.is_empty() {
        flat.clone()
    } else {
        let mut seq = match cfg.lstm_input_mode {
            LstmInputMode::FlatSingleStep => flat.clone().reshape(&[batch, 1, features])?,
            LstmInputMode::SequenceTBy32 => channels_last(&pooled),
        };
        let mut row_input = match cfg.lstm_input_mode {
            LstmInputMode::FlatSingleStep => flat.clone(),
            LstmInputMode::SequenceTBy32 => seq.clone(),
        };
        let mut h = Tensor::zeros(&[0]);
        for p in &w.lstm {
            let (out, cache) = lstm_layer_forward(&seq, p)?;
            row("LSTM", &row_input, &out);
            lstm.push(cache);
            let hidden = out.dim(1);
            seq = out.clone().reshape(&[batch, 1, hidden])?;
            row_input = out.clone();
            h = out;
        }
        h
    };

    let fc1_out = linear_forward(&fc1_in, &w.fc1)?;
    row("Linear", &fc1_in, &fc1_out);
    let fc2_in = relu(&fc1_out);
    row("Relu", &fc1_out, &fc2_in);
    let logits = linear_forward(&fc2_in, &w.fc2)?;
    row("Linear", &fc2_in, &logits);

    let cache = ForwardCache {
        input: x.clone(),
        conv1_out,
        pool1,
        pool1_out,
        conv2_out,
        pool2,
        pooled_shape,
        flat,
        lstm,
        fc1_in,
        fc1_out,
        fc2_in,
        shapes,
    };
    Ok((logits, cache))
}

/// Inference forward pass.
pub fn forward(w: &ModelWeights, cfg: &ModelConfig, x: &Tensor) -> Result<Tensor> {
    forward_train(w, cfg, x).map(|(logits, _)| logits)
}

pub fn forward_cnn_only(w: &ModelWeights, cfg: &ModelConfig, x: &Tensor) -> Result<Tensor> {
    forward(w, &cfg.clone().cnn_only(), x)
}

/// Gradients of the loss for every parameter, given `dlogits`.
pub fn backward(w: &ModelWeights, cfg: &ModelConfig, cache: &ForwardCache, dlogits: &Tensor) -> Result<ModelWeights> {
    let batch = cache.input.dim(0);
    dlogits.expect_shape("model backward", &[batch, cfg.classes])?;
    if cache.lstm.len() != w.lstm.len() {
        return Err(Error::Contract("forward cache built for a different variant".into()));
    }

    let g_fc2 = linear_backward(&cache.fc2_in, &w.fc2, dlogits)?;
    let d_fc1_out = relu_backward(&cache.fc1_out, &g_fc2.input)?;
    let g_fc1 = linear_backward(&cache.fc1_in, &w.fc1, &d_fc1_out)?;

    let mut lstm_grads = Vec::with_capacity(w.lstm.len());
    let d_flat = if w.lstm.is_empty() {
        g_fc1.input
    } else {
        let mut dh = g_fc1.input;
        for (l, (p, c)) in w.lstm.iter().zip(&cache.lstm).enumerate().rev() {
            let g = lstm_layer_backward(c, &dh, p)?;
            lstm_grads.push(g.params);
            dh = if l > 0 {
                g.input.reshape(&[batch, p.input_dim()])?
            } else {
                g.input
            };
        }
        lstm_grads.reverse();
        match cfg.lstm_input_mode {
            LstmInputMode::FlatSingleStep => dh.reshape(cache.flat.shape())?,
            LstmInputMode::SequenceTBy32 => channels_first(&dh),
        }
    };

    let d_pooled = d_flat.reshape(&cache.pooled_shape)?;
    let d_a2 = maxpool1d_backward(&cache.pool2, &d_pooled)?;
    let d_conv2 = relu_backward(&cache.conv2_out, &d_a2)?;
    let g_conv2 = conv1d_backward(&cache.pool1_out, &w.conv2, &d_conv2)?;
    let d_a1 = maxpool1d_backward(&cache.pool1, &g_conv2.input)?;
    let d_conv1 = relu_backward(&cache.conv1_out, &d_a1)?;
    let g_conv1 = conv1d_backward(&cache.input, &w.conv1, &d_conv1)?;

    Ok(ModelWeights {
        conv1: g_conv1.params,
        conv2: g_conv2.params,
        lstm: lstm_grads,
        fc1: g_fc1.params,
        fc2: g_fc2.params,
    })
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    let k = logits.dim(logits.rank() - 1);
    logits
        .data()
        .chunks_exact(k)
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub fn predict_labels(w: &ModelWeights, cfg: &ModelConfig, x: &Tensor) -> Result<Vec<usize>> {
    forward(w, cfg, x).map(|l| argmax_rows(&l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lstm_input_width() {
        let cfg = ModelConfig::default();
        assert_eq!(cfg.lstm_input_dim(), 32 * (150 / 4));
        assert_eq!(cfg.lstm_input_dim(), 1184);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ModelConfig {
                input_length: 3,
                ..Default::default()
            },
            ModelConfig {
                classes: 1,
                ..Default::default()
            },
            ModelConfig {
                kernel: 2,
                ..Default::default()
            },
            ModelConfig {
                lstm_layers: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(build_model(&cfg, 1), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let cfg = ModelConfig {
            input_length: 16,
            ..Default::default()
        };
        assert_eq!(build_model(&cfg, 9).unwrap(), build_model(&cfg, 9).unwrap());
        assert_ne!(build_model(&cfg, 9).unwrap(), build_model(&cfg, 10).unwrap());
    }

    #[test]
    fn cnn_only_fc1_shape() {
        let w = build_cnn_only(&ModelConfig::default(), 0).unwrap();
        assert_eq!(w.fc1.weight.shape(), &[128, 1184]);
        assert!(w.lstm.is_empty());
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        let t = Tensor::new(&[3, 4], vec![0.1, 0.9, 0.2, 0.2, 1., 1., 1., 1., 0., 3., 3., -1.]).unwrap();
        assert_eq!(argmax_rows(&t), vec![1, 0, 1]);
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let cfg = ModelConfig {
            input_length: 12,
            ..Default::default()
        };
        let w = ModelWeights::zeros(&cfg).unwrap();
        let x = Tensor::full(&[2, 8, 12], 0.3);
        let logits = forward(&w, &cfg, &x).unwrap();
        assert_eq!(logits.shape(), &[2, 4]);
        assert_eq!(logits.max_abs(), 0.0);
    }

    #[test]
    fn wrong_input_shape() {
        let cfg = ModelConfig {
            input_length: 12,
            ..Default::default()
        };
        let w = ModelWeights::zeros(&cfg).unwrap();
        assert!(matches!(
            forward(&w, &cfg, &Tensor::zeros(&[1, 7, 12])),
            Err(Error::Dimension { .. })
        ));
    }
}
