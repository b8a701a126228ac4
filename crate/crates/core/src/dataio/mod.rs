//! CSV ingestion, the binary windows format, and synthetic data.

mod raw_csv;
mod synth;
mod windows_file;

pub use raw_csv::{parse_raw_csv, read_raw_csv, RAW_COLUMNS, SAMPLING_TOLERANCE_S};
pub use synth::{synth_generate, SynthConfig, TONE_STEP_HZ};
pub use windows_file::{
    decode_windows, encode_windows, read_windows, read_windows_sidecar, write_windows, WindowsSidecar,
};
