use std::path::PathBuf;

use fnwl_core::dataio::{synth_generate, write_windows, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::error::{code, CliError, Context};
use crate::settings::{fill_from, metadata, section, ConfigFile};

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Output windows file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Windows per class.
    #[arg(long)]
    pub n: Option<usize>,
    /// Signal-to-noise ratio in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr: Option<f64>,
    #[arg(long, env = "FNWL_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Pass each window through the standard bandpass.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub bandpass: Option<bool>,
    #[arg(long)]
    pub subjects: Option<usize>,
}

pub fn run(mut a: Args, file: &ConfigFile) -> Result<i32, CliError> {
    let f: Args = section(&file.synth, "synth")?;
    fill_from!(
        a,
        f,
        [out, n, snr, seed, classes, length, channels, fs, bandpass, subjects]
    );
    let out = a
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("synth: --out is required".into()))?;
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        classes: a.classes.unwrap_or(d.classes),
        windows_per_class: a.n.unwrap_or(d.windows_per_class),
        length: a.length.unwrap_or(d.length),
        channels: a.channels.unwrap_or(d.channels),
        seed: a.seed.unwrap_or(d.seed),
        snr_db: a.snr.unwrap_or(d.snr_db),
        sample_rate_hz: a.fs.unwrap_or(d.sample_rate_hz),
        bandpass: a.bandpass.unwrap_or(d.bandpass),
        subjects: a.subjects.unwrap_or(d.subjects),
        ..d
    };
    let data = synth_generate(&cfg).context("generating synthetic windows")?;
    write_windows(&out, &data, metadata("synth", &cfg)).context(format!("writing {}", out.display()))?;
    println!("wrote {} windows to {}", data.len(), out.display());
    Ok(code::OK)
}
