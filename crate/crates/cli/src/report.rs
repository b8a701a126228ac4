//! Shared helpers: split selection and report output.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fnwl_core::dataset::WindowDataset;
use fnwl_core::evaluation::{build_report, confusion_matrix, ReportMetadata, ScoreInput};
use fnwl_core::training::{split_indices, SplitMode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Random,
    Subject,
}

impl From<SplitArg> for SplitMode {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Random => SplitMode::Random,
            SplitArg::Subject => SplitMode::BySubject,
        }
    }
}

/// Train/test halves of `d`; a zero test fraction keeps everything for training.
pub fn split(
    d: &WindowDataset,
    test_fraction: f64,
    seed: u64,
    mode: SplitArg,
) -> Result<(WindowDataset, Option<WindowDataset>), CliError> {
    if test_fraction == 0.0 {
        return Ok((d.clone(), None));
    }
    let (train, test) = split_indices(d, test_fraction, seed, mode.into()).context("splitting dataset")?;
    Ok((d.subset(&train), Some(d.subset(&test))))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Format(format!("cannot write {}: {e}", path.display())))
}

pub struct ReportRequest<'a> {
    pub actual: &'a [usize],
    pub predicted: &'a [usize],
    pub scores: &'a [f64],
    pub classes: usize,
    pub metadata: ReportMetadata,
    pub report: Option<PathBuf>,
    pub confusion: Option<PathBuf>,
}

/// Builds the report, writes it (or prints it when no path is given) and
/// returns the accuracy.
pub fn emit(req: ReportRequest<'_>) -> Result<f64, CliError> {
    let m = confusion_matrix(req.actual, req.predicted, req.classes).context("confusion matrix")?;
    let scores = ScoreInput {
        scores: req.scores,
        actual: req.actual,
    };
    let report = build_report(&m, Some(scores), req.metadata).context("building report")?;
    let json = report.to_json().context("serializing report")?;
    match &req.report {
        Some(p) => write_text(p, &json)?,
        None => print!("{json}"),
    }
    if let Some(p) = &req.confusion {
        write_text(p, &m.to_csv())?;
    }
    Ok(report.accuracy)
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
