use serde::{Deserialize, Serialize};

use crate::dataset::WindowDataset;
use crate::error::{Error, Result};

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    pub fn identity(channels: usize) -> Self {
        ChannelStats {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    /// Moments pooled over every window and time step of each channel.
    pub fn fit(d: &WindowDataset) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Fit(
                "cannot compute channel statistics of an empty dataset".into(),
            ));
        }
        let (c, l) = (d.channels, d.length);
        let count = (d.len() * l) as f64;
        let mut mean = vec![0.0; c];
        for w in 0..d.len() {
            for (ch, m) in d.window(w).chunks_exact(l).zip(mean.iter_mut()) {
                *m += ch.iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; c];
        for w in 0..d.len() {
            for ((ch, v), m) in d.window(w).chunks_exact(l).zip(var.iter_mut()).zip(&mean) {
                *v += ch.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
            }
        }
        let std = var.into_iter().map(|v| (v / count).sqrt()).collect();
        Ok(ChannelStats { mean, std })
    }
}

/// Applies `(x − mean) / std` per channel. Channels with a non-positive or
/// non-finite std are copied through unchanged and listed in the result.
pub fn standardize_channels(d: &WindowDataset, stats: &ChannelStats) -> Result<(WindowDataset, Vec<usize>)> {
    if stats.mean.len() != d.channels || stats.std.len() != d.channels {
        return Err(Error::dim(
            "standardize_channels",
            &[d.channels],
            &[stats.mean.len().max(stats.std.len())],
        ));
    }
    let skipped: Vec<usize> = (0..d.channels)
        .filter(|&c| !(stats.std[c] > 0.0 && stats.std[c].is_finite()))
        .collect();
    for &c in &skipped {
        log::warn!("channel {} has zero variance; left unscaled", c + 1);
    }
    let mut out = d.clone();
    let l = d.length;
    for window in out.values.chunks_exact_mut(d.channels * l) {
        for (c, ch) in window.chunks_exact_mut(l).enumerate() {
            if skipped.contains(&c) {
                continue;
            }
            let (m, s) = (stats.mean[c], stats.std[c]);
            ch.iter_mut().for_each(|x| *x = (*x - m) / s);
        }
    }
    Ok((out, skipped))
}
