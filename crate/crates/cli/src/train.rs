use std::path::PathBuf;

use clap::ValueEnum;
use fnwl_core::dataio::read_windows;
use fnwl_core::model::{build_model, save_weights, sidecar_path, LstmInputMode, ModelConfig, Variant};
use fnwl_core::training::{accuracy, train_with, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{code, CliError, Context};
use crate::report::{display, split, write_text, SplitArg};
use crate::settings::{fill_from, metadata, section, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ModelArg {
    #[value(name = "cnn-lstm")]
    #[serde(rename = "cnn-lstm")]
    CnnLstm,
    #[value(name = "cnn")]
    #[serde(rename = "cnn")]
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LstmModeArg {
    /// The flattened conv features as one time step.
    Flat,
    /// One time step per pooled position.
    Seq,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Windows file to train on.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Mini-batch size.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Seeds initialisation, the split and the epoch shuffles.
    #[arg(long, env = "FNWL_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub lstm_mode: Option<LstmModeArg>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Output weight file; its configuration goes to `<out>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch CSV log; provenance goes to `<log>.json`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Held-out fraction; 0 trains on every window.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Write epoch wall times to the log; off writes 0 for byte-stable logs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub record_time: Option<bool>,
}

/// Effective settings, echoed into the weights and log sidecars.
#[derive(Debug, Serialize)]
pub struct Effective {
    pub data: String,
    pub model: ModelArg,
    pub seed: u64,
    pub test_fraction: f64,
    pub split: SplitArg,
    pub training: TrainConfig,
    pub model_config: ModelConfig,
}

pub fn run(mut a: Args, file: &ConfigFile) -> Result<i32, CliError> {
    let f: Args = section(&file.train, "train")?;
    fill_from!(
        a,
        f,
        [
            data,
            model,
            epochs,
            lr,
            batch,
            seed,
            lstm_mode,
            classes,
            out,
            log,
            test_fraction,
            split,
            record_time
        ]
    );
    let data_path = a
        .data
        .clone()
        .ok_or_else(|| CliError::Usage("train: --data is required".into()))?;
    let out = a
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("train: --out is required".into()))?;

    let defaults = TrainConfig::default();
    let seed = a.seed.unwrap_or(defaults.seed);
    let tc = TrainConfig {
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        batch_size: a.batch.unwrap_or(defaults.batch_size),
        seed,
        record_time: a.record_time.unwrap_or(defaults.record_time),
        ..defaults
    };
    tc.validate().context("training settings")?;
    let test_fraction = a.test_fraction.unwrap_or(0.2);
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(CliError::Usage(format!(
            "--test-fraction {test_fraction} must lie in [0, 1)"
        )));
    }

    let data = read_windows(&data_path).context(display(&data_path))?;
    let model = a.model.unwrap_or(ModelArg::CnnLstm);
    let mc = ModelConfig {
        input_channels: data.channels,
        input_length: data.length,
        classes: a.classes.unwrap_or(4),
        lstm_input_mode: match a.lstm_mode.unwrap_or(LstmModeArg::Flat) {
            LstmModeArg::Flat => LstmInputMode::FlatSingleStep,
            LstmModeArg::Seq => LstmInputMode::SequenceTBy32,
        },
        variant: match model {
            ModelArg::CnnLstm => Variant::CnnLstm,
            ModelArg::Cnn => Variant::CnnOnly,
        },
        ..ModelConfig::default()
    };
    mc.validate().context("model settings")?;
    data.validate(mc.classes).context(display(&data_path))?;

    let split_mode = a.split.unwrap_or(SplitArg::Random);
    let (train_set, test_set) = split(&data, test_fraction, seed, split_mode)?;
    let eff = Effective {
        data: display(&data_path),
        model,
        seed,
        test_fraction,
        split: split_mode,
        training: tc.clone(),
        model_config: mc.clone(),
    };
    let meta = metadata("train", &eff);

    let init = build_model(&mc, seed).context("initialising model")?;
    let outcome = train_with(init, &mc, &train_set, test_set.as_ref(), &tc, |r| {
        log::info!(
            "epoch {} loss {:.6} train acc {:.4} test acc {}",
            r.epoch,
            r.train_loss,
            r.train_acc,
            r.test_acc.map_or("-".into(), |v| format!("{v:.4}"))
        );
    })
    .context("training")?;

    save_weights(&outcome.weights, &mc, &out, meta.clone()).context(display(&out))?;
    if let Some(log_path) = &a.log {
        write_text(log_path, &outcome.log.to_csv())?;
        let mut side = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        side.push('\n');
        write_text(&sidecar_path(log_path), &side)?;
    }

    let batch = tc.batch_size.max(256);
    let train_acc = accuracy(&outcome.weights, &mc, &train_set, batch).context("train accuracy")?;
    println!("final train accuracy: {train_acc:.4}");
    if let Some(test) = &test_set {
        let test_acc = accuracy(&outcome.weights, &mc, test, batch).context("test accuracy")?;
        println!("final test accuracy: {test_acc:.4}");
    }
    Ok(code::OK)
}
