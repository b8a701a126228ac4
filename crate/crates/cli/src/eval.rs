use std::path::PathBuf;

use clap::ValueEnum;
use fnwl_core::dataio::read_windows;
use fnwl_core::engine::softmax;
use fnwl_core::evaluation::ReportMetadata;
use fnwl_core::model::{argmax_rows, forward, load_weights};
use fnwl_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::error::{code, CliError, Context};
use crate::report::{display, emit, split, ReportRequest, SplitArg};
use crate::settings::{fill_from, metadata, section, tool_version, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    Train,
    Test,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Windows file to evaluate on.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Weight file written by `train`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Report JSON path; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Confusion matrix CSV path.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    /// Which side of the training split to evaluate.
    #[arg(long, value_enum)]
    pub subset: Option<Subset>,
    /// Split parameters; default to the ones recorded with the weights.
    #[arg(long, env = "FNWL_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
}

#[derive(Debug, Serialize)]
struct Effective {
    data: String,
    weights: String,
    subset: Subset,
    seed: Option<u64>,
    test_fraction: Option<f64>,
    split: Option<SplitArg>,
}

/// A weight file that does not fit its configuration is a format problem.
fn weights_error(path: &str, e: CoreError) -> CliError {
    match e {
        CoreError::Config(msg) => CliError::Format(format!("{path}: {msg}")),
        other => CliError::Core {
            context: path.to_string(),
            source: other,
        },
    }
}

pub fn run(mut a: Args, file: &ConfigFile) -> Result<i32, CliError> {
    let f: Args = section(&file.eval, "eval")?;
    fill_from!(
        a,
        f,
        [data, weights, report, confusion, subset, seed, test_fraction, split]
    );
    let data_path = a
        .data
        .clone()
        .ok_or_else(|| CliError::Usage("eval: --data is required".into()))?;
    let weights_path = a
        .weights
        .clone()
        .ok_or_else(|| CliError::Usage("eval: --weights is required".into()))?;

    let (w, sidecar) = load_weights(&weights_path).map_err(|e| weights_error(&display(&weights_path), e))?;
    let mc = sidecar.model_config.clone();
    let data = read_windows(&data_path).context(display(&data_path))?;
    if data.channels != mc.input_channels || data.length != mc.input_length {
        return Err(CliError::Format(format!(
            "{} holds {}x{} windows but the weights expect {}x{}",
            data_path.display(),
            data.channels,
            data.length,
            mc.input_channels,
            mc.input_length
        )));
    }
    data.validate(mc.classes).context(display(&data_path))?;

    let recorded = &sidecar.metadata["config"];
    let subset = a.subset.unwrap_or(Subset::All);
    let mut eff = Effective {
        data: display(&data_path),
        weights: display(&weights_path),
        subset,
        seed: None,
        test_fraction: None,
        split: None,
    };
    let chosen = match subset {
        Subset::All => data,
        Subset::Train | Subset::Test => {
            let seed = a.seed.or_else(|| recorded["seed"].as_u64());
            let fraction = a.test_fraction.or_else(|| recorded["test_fraction"].as_f64());
            let mode = a
                .split
                .or_else(|| serde_json::from_value(recorded["split"].clone()).ok());
            let (Some(seed), Some(fraction), Some(mode)) = (seed, fraction, mode) else {
                return Err(CliError::Usage(
                    "eval: --subset needs --seed, --test-fraction and --split when the weights do not record them"
                        .into(),
                ));
            };
            eff.seed = Some(seed);
            eff.test_fraction = Some(fraction);
            eff.split = Some(mode);
            let (train, test) = split(&data, fraction, seed, mode)?;
            match subset {
                Subset::Train => train,
                _ => test.ok_or_else(|| CliError::Usage("eval: a zero test fraction leaves no test windows".into()))?,
            }
        }
    };
    if chosen.is_empty() {
        return Err(CliError::Core {
            context: "eval".into(),
            source: CoreError::Metric("no windows to evaluate".into()),
        });
    }

    let classes = mc.classes;
    let mut scores = Vec::with_capacity(chosen.len() * classes);
    let mut predicted = Vec::with_capacity(chosen.len());
    let all: Vec<usize> = (0..chosen.len()).collect();
    for chunk in all.chunks(256) {
        let logits = forward(&w, &mc, &chosen.batch(chunk)).context("forward pass")?;
        predicted.extend(argmax_rows(&logits));
        scores.extend_from_slice(softmax(&logits).data());
    }
    let meta = metadata("eval", &eff);
    let acc = emit(ReportRequest {
        actual: &chosen.labels_usize(),
        predicted: &predicted,
        scores: &scores,
        classes,
        metadata: ReportMetadata {
            model_id: display(&weights_path),
            dataset_id: display(&data_path),
            split_seed: eff.seed,
            tool: tool_version(),
            config: meta,
        },
        report: a.report.clone(),
        confusion: a.confusion.clone(),
    })?;
    eprintln!("accuracy: {acc:.4}");
    Ok(code::OK)
}
