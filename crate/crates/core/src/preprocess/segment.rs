use crate::dataset::{RawRecording, WindowDataset, UNLABELED};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentOptions {
    pub window_len: usize,
    pub stride: usize,
    /// Drop windows whose samples carry more than one label.
    pub pure_only: bool,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            window_len: 150,
            stride: 3,
            pure_only: true,
        }
    }
}

/// Number of window starts that fit in `total` samples.
pub fn window_count(total: usize, window_len: usize, stride: usize) -> usize {
    if window_len == 0 || stride == 0 || total < window_len {
        0
    } else {
        (total - window_len) / stride + 1
    }
}

/// Majority label over the span; ties go to the final sample's label when it
/// is among the tied, else to the smallest tied label.
fn majority(labels: &[i8]) -> i8 {
    let mut counts = [0usize; 256];
    for &l in labels {
        counts[l as u8 as usize] += 1;
    }
    let best = *counts.iter().max().expect("non-empty");
    let last = *labels.last().expect("non-empty");
    if counts[last as u8 as usize] == best {
        return last;
    }
    (0..=i8::MAX)
        .find(|&l| counts[l as usize] == best)
        .expect("some label has the max count")
}

/// Slides a window over the recording and labels each span.
///
/// Windows containing unlabeled samples are skipped, as are mixed-label
/// windows when `pure_only` is set.
pub fn segment_windows(rec: &RawRecording, opts: &SegmentOptions) -> Result<WindowDataset> {
    if opts.window_len == 0 || opts.stride == 0 {
        return Err(Error::Param("window length and stride must be at least 1".into()));
    }
    rec.validate()?;
    let c = rec.channels.len();
    let len = opts.window_len;
    let mut out = WindowDataset::empty(c, len, rec.sample_rate_hz, opts.stride);
    let mut buf = vec![0.0; c * len];
    for w in 0..window_count(rec.len(), len, opts.stride) {
        let start = w * opts.stride;
        let span = &rec.labels[start..start + len];
        if span.contains(&UNLABELED) {
            continue;
        }
        if opts.pure_only && span.iter().any(|&l| l != span[0]) {
            continue;
        }
        let label = majority(span);
        if label < 0 {
            return Err(Error::Label {
                label: label as u8 as usize,
                classes: 0,
            });
        }
        for (ch, series) in rec.channels.iter().enumerate() {
            buf[ch * len..(ch + 1) * len].copy_from_slice(&series[start..start + len]);
        }
        out.push(&buf, label as u8, &rec.subject_id)?;
    }
    Ok(out)
}
