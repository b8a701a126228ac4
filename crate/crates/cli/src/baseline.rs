use std::path::PathBuf;

use clap::ValueEnum;
use fnwl_core::baselines::{fit_predict, BaselineKind, FlatDataset};
use fnwl_core::dataio::read_windows;
use fnwl_core::evaluation::ReportMetadata;
use fnwl_core::preprocess::{standardize_channels, ChannelStats};
use serde::{Deserialize, Serialize};

use crate::error::{code, CliError, Context};
use crate::report::{display, emit, split, ReportRequest, SplitArg};
use crate::settings::{fill_from, metadata, section, tool_version, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    /// Gaussian naive Bayes.
    Nb,
    Centroid,
    Tree,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalOn {
    Train,
    Test,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Windows file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    /// Neighbours for knn.
    #[arg(long)]
    pub k: Option<usize>,
    /// Depth limit for tree; unlimited when absent.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Scale channels with statistics fitted on the training side.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, env = "FNWL_SEED")]
    pub seed: Option<u64>,
    /// Held-out fraction.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Score the fitted model on the held-out or the training side.
    #[arg(long, value_enum)]
    pub eval_on: Option<EvalOn>,
    /// Report JSON path; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Confusion matrix CSV path.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Effective {
    data: String,
    algorithm: BaselineKind,
    standardize: bool,
    classes: usize,
    seed: u64,
    test_fraction: f64,
    split: SplitArg,
    eval_on: EvalOn,
}

pub fn run(mut a: Args, file: &ConfigFile) -> Result<i32, CliError> {
    let f: Args = section(&file.baseline, "baseline")?;
    fill_from!(
        a,
        f,
        [
            data,
            algo,
            k,
            max_depth,
            standardize,
            classes,
            seed,
            test_fraction,
            split,
            eval_on,
            report,
            confusion
        ]
    );
    let data_path = a
        .data
        .clone()
        .ok_or_else(|| CliError::Usage("baseline: --data is required".into()))?;
    let kind = match a.algo.unwrap_or(Algo::Nb) {
        Algo::Nb => BaselineKind::NaiveBayes,
        Algo::Centroid => BaselineKind::NearestCentroid,
        Algo::Tree => BaselineKind::DecisionTree { max_depth: a.max_depth },
        Algo::Knn => BaselineKind::Knn { k: a.k.unwrap_or(5) },
    };
    let eff = Effective {
        data: display(&data_path),
        algorithm: kind,
        standardize: a.standardize.unwrap_or(false),
        classes: a.classes.unwrap_or(4),
        seed: a.seed.unwrap_or(42),
        test_fraction: a.test_fraction.unwrap_or(0.2),
        split: a.split.unwrap_or(SplitArg::Random),
        eval_on: a.eval_on.unwrap_or(EvalOn::Test),
    };
    if !(0.0..1.0).contains(&eff.test_fraction) {
        return Err(CliError::Usage(format!(
            "--test-fraction {} must lie in [0, 1)",
            eff.test_fraction
        )));
    }

    let data = read_windows(&data_path).context(display(&data_path))?;
    data.validate(eff.classes).context(display(&data_path))?;
    let (mut train, mut test) = split(&data, eff.test_fraction, eff.seed, eff.split)?;
    if eff.standardize {
        let stats = ChannelStats::fit(&train).context("fitting channel statistics")?;
        train = standardize_channels(&train, &stats).context("standardizing")?.0;
        if let Some(t) = &test {
            test = Some(standardize_channels(t, &stats).context("standardizing")?.0);
        }
    }
    let target = match eff.eval_on {
        EvalOn::Train => &train,
        EvalOn::Test => test
            .as_ref()
            .ok_or_else(|| CliError::Usage("baseline: a zero test fraction leaves no test windows".into()))?,
    };

    let fit_set = FlatDataset::from_windows(&train, eff.classes).context("training features")?;
    let pred = fit_predict(kind, &fit_set, &target.values).context(kind.name())?;
    let acc = emit(ReportRequest {
        actual: &target.labels_usize(),
        predicted: &pred.labels,
        scores: &pred.scores,
        classes: eff.classes,
        metadata: ReportMetadata {
            model_id: kind.name().to_string(),
            dataset_id: display(&data_path),
            split_seed: Some(eff.seed),
            tool: tool_version(),
            config: metadata("baseline", &eff),
        },
        report: a.report.clone(),
        confusion: a.confusion.clone(),
    })?;
    eprintln!("accuracy: {acc:.4}");
    Ok(code::OK)
}
