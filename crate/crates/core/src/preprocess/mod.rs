//! Bandpass design, zero-phase filtering, windowing and channel scaling.

mod butterworth;
mod filtfilt;
mod segment;
mod standardize;

pub use butterworth::{design_butterworth_bandpass, Biquad, SosFilter};
pub use filtfilt::{filtfilt, sosfilt, sosfilt_zi};
pub use segment::{segment_windows, window_count, SegmentOptions};
pub use standardize::{standardize_channels, ChannelStats};

use crate::dataset::RawRecording;
use crate::error::Result;

/// Filters every channel of a recording with `filter`.
pub fn filter_recording(rec: &RawRecording, filter: &SosFilter) -> Result<RawRecording> {
    let channels = rec
        .channels
        .iter()
        .map(|ch| filtfilt(filter, ch))
        .collect::<Result<Vec<_>>>()?;
    Ok(RawRecording {
        channels,
        ..rec.clone()
    })
}
