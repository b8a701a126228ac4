use std::path::PathBuf;

use fnwl_core::dataio::{read_raw_csv, write_windows};
use fnwl_core::dataset::WindowDataset;
use fnwl_core::preprocess::{design_butterworth_bandpass, filter_recording, segment_windows, SegmentOptions};
use serde::{Deserialize, Serialize};

use crate::error::{code, CliError, Context};
use crate::report::display;
use crate::settings::{fill_from, metadata, section, ConfigFile};

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Raw recording CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output windows file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampling rate in Hz; defaults to the rate implied by the timestamps.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Lower cutoff in Hz.
    #[arg(long)]
    pub low: Option<f64>,
    /// Upper cutoff in Hz.
    #[arg(long)]
    pub high: Option<f64>,
    /// Butterworth prototype order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Window length in samples.
    #[arg(long, conflicts_with = "window_secs")]
    pub window: Option<usize>,
    /// Window stride in samples.
    #[arg(long, conflicts_with = "stride_secs")]
    pub stride: Option<usize>,
    /// Window length in seconds, rounded to samples at the sampling rate.
    #[arg(long)]
    pub window_secs: Option<f64>,
    /// Window stride in seconds, rounded to samples at the sampling rate.
    #[arg(long)]
    pub stride_secs: Option<f64>,
    /// Keep only windows whose samples all carry one label.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pure_only: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Effective {
    input: String,
    fs: f64,
    low: f64,
    high: f64,
    order: usize,
    window: usize,
    stride: usize,
    pure_only: bool,
}

fn seconds_to_samples(secs: f64, fs: f64, flag: &str) -> Result<usize, CliError> {
    let n = (secs * fs).round();
    if !(n >= 1.0 && n.is_finite()) {
        return Err(CliError::Usage(format!(
            "{flag} {secs} s is less than one sample at {fs} Hz"
        )));
    }
    Ok(n as usize)
}

pub fn run(mut a: Args, file: &ConfigFile) -> Result<i32, CliError> {
    let f: Args = section(&file.preprocess, "preprocess")?;
    fill_from!(
        a,
        f,
        [
            input,
            out,
            fs,
            low,
            high,
            order,
            window,
            stride,
            window_secs,
            stride_secs,
            pure_only
        ]
    );
    let input = a
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("preprocess: --input is required".into()))?;
    let out = a
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("preprocess: --out is required".into()))?;
    let seg = SegmentOptions::default();
    let low = a.low.unwrap_or(0.001);
    let high = a.high.unwrap_or(0.2);
    let order = a.order.unwrap_or(3);
    if low >= high {
        return Err(CliError::Usage(format!("--low {low} must be below --high {high}")));
    }

    let mut recordings = read_raw_csv(&input).context(display(&input))?;
    let inferred = recordings[0].sample_rate_hz;
    if let Some(r) = recordings
        .iter()
        .find(|r| (r.sample_rate_hz - inferred).abs() > 1e-6 * inferred)
    {
        return Err(CliError::Format(format!(
            "{}: subject {} is sampled at {} Hz but subject {} at {} Hz",
            input.display(),
            r.subject_id,
            r.sample_rate_hz,
            recordings[0].subject_id,
            inferred
        )));
    }
    let fs = a.fs.unwrap_or(inferred);
    if (fs - inferred).abs() > 0.01 * inferred {
        log::warn!("--fs {fs} differs from the {inferred} Hz implied by the timestamps");
    }
    let window = match (a.window, a.window_secs) {
        (Some(w), _) => w,
        (None, Some(s)) => seconds_to_samples(s, fs, "--window-secs")?,
        (None, None) => seg.window_len,
    };
    let stride = match (a.stride, a.stride_secs) {
        (Some(s), _) => s,
        (None, Some(s)) => seconds_to_samples(s, fs, "--stride-secs")?,
        (None, None) => seg.stride,
    };
    let eff = Effective {
        input: display(&input),
        fs,
        low,
        high,
        order,
        window,
        stride,
        pure_only: a.pure_only.unwrap_or(seg.pure_only),
    };
    let opts = SegmentOptions {
        window_len: window,
        stride,
        pure_only: eff.pure_only,
    };

    let filter = design_butterworth_bandpass(order, low, high, fs).context("filter design")?;
    let mut all: Option<WindowDataset> = None;
    for rec in &mut recordings {
        rec.sample_rate_hz = fs;
        let filtered = filter_recording(rec, &filter).context(format!("filtering subject {}", rec.subject_id))?;
        let windows = segment_windows(&filtered, &opts).context(format!("segmenting subject {}", rec.subject_id))?;
        log::info!("subject {}: {} windows", rec.subject_id, windows.len());
        match &mut all {
            None => all = Some(windows),
            Some(d) => d.extend(&windows).context("merging subjects")?,
        }
    }
    let data = all.expect("reader returns at least one recording");
    write_windows(&out, &data, metadata("preprocess", &eff)).context(display(&out))?;
    println!("wrote {} windows to {}", data.len(), out.display());
    Ok(code::OK)
}
