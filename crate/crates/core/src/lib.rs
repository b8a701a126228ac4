//! Cognitive-workload classification from 8-channel fNIRS recordings.
//!
//! The pipeline runs raw recordings through a zero-phase Butterworth bandpass,
//! cuts them into labelled windows, and classifies the windows with a
//! CNN-LSTM network trained by hand-written backpropagation and Adam. Four
//! classical baselines and a multiclass metric suite share the same inputs.

pub mod baselines;
pub mod dataio;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod gradsuite;
pub mod model;
pub mod preprocess;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::Tensor;
