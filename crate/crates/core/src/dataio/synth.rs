use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::WindowDataset;
use crate::error::{Error, Result};
use crate::preprocess::{design_butterworth_bandpass, filtfilt};

/// Base of the tone frequencies: class `c` oscillates at `(c + 1) · TONE_STEP_HZ`.
pub const TONE_STEP_HZ: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub windows_per_class: usize,
    pub length: usize,
    pub channels: usize,
    pub seed: u64,
    /// Signal-to-noise ratio in dB; `inf` gives noise-free tones.
    pub snr_db: f64,
    pub sample_rate_hz: f64,
    /// Run each window through the zero-phase bandpass below.
    pub bandpass: bool,
    pub filter_order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Windows are assigned to this many subjects round-robin.
    pub subjects: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 4,
            windows_per_class: 150,
            length: 150,
            channels: 8,
            seed: 42,
            snr_db: 10.0,
            sample_rate_hz: 5.2,
            bandpass: true,
            filter_order: 3,
            low_hz: 0.001,
            high_hz: 0.2,
            subjects: 1,
        }
    }
}

impl SynthConfig {
    pub fn tone_hz(&self, class: usize) -> f64 {
        (class + 1) as f64 * TONE_STEP_HZ
    }

    pub fn noise_std(&self) -> f64 {
        // A unit-amplitude sinusoid has power 1/2.
        (0.5 / 10f64.powf(self.snr_db / 10.0)).sqrt()
    }
}

/// Labelled tone windows. Generator draws, from `ChaCha8Rng::seed_from_u64(seed)`:
/// for each class, for each window, first one phase per channel, then the
/// noise samples channel by channel. Windows are stored class by class.
pub fn synth_generate(cfg: &SynthConfig) -> Result<WindowDataset> {
    for (name, v) in [
        ("classes", cfg.classes),
        ("windows per class", cfg.windows_per_class),
        ("length", cfg.length),
        ("channels", cfg.channels),
        ("subjects", cfg.subjects),
    ] {
        if v == 0 {
            return Err(Error::Param(format!("{name} must be positive")));
        }
    }
    if cfg.classes > 256 {
        return Err(Error::Param("at most 256 classes fit a window label".into()));
    }
    if !(cfg.sample_rate_hz > 0.0 && cfg.sample_rate_hz.is_finite()) {
        return Err(Error::Param(format!(
            "sample rate {} must be positive",
            cfg.sample_rate_hz
        )));
    }
    if cfg.snr_db.is_nan() {
        return Err(Error::Param("SNR is NaN".into()));
    }
    let nyquist = cfg.sample_rate_hz / 2.0;
    let top = cfg.tone_hz(cfg.classes - 1);
    if top >= nyquist {
        return Err(Error::Param(format!(
            "class {} tone at {top} Hz is not below the Nyquist frequency {nyquist} Hz",
            cfg.classes - 1
        )));
    }
    let filter = if cfg.bandpass {
        Some(design_butterworth_bandpass(
            cfg.filter_order,
            cfg.low_hz,
            cfg.high_hz,
            cfg.sample_rate_hz,
        )?)
    } else {
        None
    };
    let sigma = cfg.noise_std();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Param(format!("noise level: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = WindowDataset::empty(cfg.channels, cfg.length, cfg.sample_rate_hz, cfg.length);
    let mut window = vec![0.0; cfg.channels * cfg.length];
    let mut index = 0usize;
    for class in 0..cfg.classes {
        let omega = 2.0 * PI * cfg.tone_hz(class) / cfg.sample_rate_hz;
        for _ in 0..cfg.windows_per_class {
            let phases: Vec<f64> = (0..cfg.channels).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            for (ch, phase) in phases.iter().enumerate() {
                let row = &mut window[ch * cfg.length..(ch + 1) * cfg.length];
                for (n, v) in row.iter_mut().enumerate() {
                    *v = (omega * n as f64 + phase).sin() + noise.sample(&mut rng);
                }
                if let Some(f) = &filter {
                    let y = filtfilt(f, row)?;
                    row.copy_from_slice(&y);
                }
            }
            let subject = format!("synth{}", index % cfg.subjects);
            d.push(&window, class as u8, &subject)?;
            index += 1;
        }
    }
    Ok(d)
}
