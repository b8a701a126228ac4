//! Adam, dataset splitting and the mini-batch training loop.

mod adam;
mod log;
mod split;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use log::{EpochRecord, TrainLog};
pub use split::{split_dataset, split_indices, SplitMode, SPLIT_STREAM};
pub use trainer::{accuracy, train, train_with, TrainConfig, TrainOutcome, SHUFFLE_STREAM};
