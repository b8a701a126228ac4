//! In-memory recordings and windowed datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Label value for samples outside any task block.
pub const UNLABELED: i8 = -1;

/// One subject's continuous multichannel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    /// One series per channel, all the same length.
    pub channels: Vec<Vec<f64>>,
    /// Per-sample task level `0..=3`, or [`UNLABELED`].
    pub labels: Vec<i8>,
}

impl RawRecording {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Schema(format!(
                "subject {}: sample rate must be positive",
                self.subject_id
            )));
        }
        if let Some((c, ch)) = self
            .channels
            .iter()
            .enumerate()
            .find(|(_, ch)| ch.len() != self.labels.len())
        {
            return Err(Error::Schema(format!(
                "subject {}: channel {} has {} samples, labels have {}",
                self.subject_id,
                c + 1,
                ch.len(),
                self.labels.len()
            )));
        }
        Ok(())
    }

    pub fn labeled_len(&self) -> usize {
        self.labels.iter().filter(|&&l| l != UNLABELED).count()
    }
}

/// Fixed-shape labelled windows, stored channel-major per window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDataset {
    pub channels: usize,
    pub length: usize,
    pub sample_rate_hz: f64,
    pub stride_samples: usize,
    /// `len() × channels × length` values.
    pub values: Vec<f64>,
    pub labels: Vec<u8>,
    /// Source subject of each window; empty strings when unknown.
    pub subjects: Vec<String>,
}

impl WindowDataset {
    pub fn empty(channels: usize, length: usize, sample_rate_hz: f64, stride_samples: usize) -> Self {
        WindowDataset {
            channels,
            length,
            sample_rate_hz,
            stride_samples,
            values: Vec::new(),
            labels: Vec::new(),
            subjects: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn window_size(&self) -> usize {
        self.channels * self.length
    }

    pub fn window(&self, i: usize) -> &[f64] {
        let n = self.window_size();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn push(&mut self, window: &[f64], label: u8, subject: &str) -> Result<()> {
        if window.len() != self.window_size() {
            return Err(Error::dim(
                "WindowDataset::push",
                &[self.window_size()],
                &[window.len()],
            ));
        }
        self.values.extend_from_slice(window);
        self.labels.push(label);
        self.subjects.push(subject.to_string());
        Ok(())
    }

    pub fn extend(&mut self, other: &WindowDataset) -> Result<()> {
        if other.channels != self.channels || other.length != self.length {
            return Err(Error::dim(
                "WindowDataset::extend",
                &[self.channels, self.length],
                &[other.channels, other.length],
            ));
        }
        self.values.extend_from_slice(&other.values);
        self.labels.extend_from_slice(&other.labels);
        self.subjects.extend(other.subjects.iter().cloned());
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> WindowDataset {
        let mut out = WindowDataset::empty(self.channels, self.length, self.sample_rate_hz, self.stride_samples);
        out.values.reserve(indices.len() * self.window_size());
        for &i in indices {
            out.values.extend_from_slice(self.window(i));
            out.labels.push(self.labels[i]);
            out.subjects.push(self.subjects[i].clone());
        }
        out
    }

    /// `[indices.len(), channels, length]` input tensor.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(indices.len() * self.window_size());
        for &i in indices {
            data.extend_from_slice(self.window(i));
        }
        Tensor::new(&[indices.len(), self.channels, self.length], data).expect("window shape")
    }

    pub fn labels_usize(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if self.values.len() != self.len() * self.window_size() || self.subjects.len() != self.len() {
            return Err(Error::Schema("window dataset arrays disagree in length".into()));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l as usize >= classes) {
            return Err(Error::Label {
                label: l as usize,
                classes,
            });
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("window values".into()));
        }
        Ok(())
    }

    /// Count of windows per class `0..classes`.
    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for &l in &self.labels {
            if (l as usize) < classes {
                counts[l as usize] += 1;
            }
        }
        counts
    }
}
