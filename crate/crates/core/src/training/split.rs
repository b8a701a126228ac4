use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::WindowDataset;
use crate::error::{Error, Result};

/// Stream of the seeded generator reserved for splitting.
pub const SPLIT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    #[default]
    Random,
    BySubject,
}

fn split_count(total: usize, fraction: f64) -> usize {
    ((total as f64 * fraction).round() as usize).clamp(1, total - 1)
}

/// Index lists `(train, test)`, each ascending.
pub fn split_indices(
    d: &WindowDataset,
    test_fraction: f64,
    seed: u64,
    mode: SplitMode,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut test_mask = vec![false; d.len()];
    match mode {
        SplitMode::Random => {
            if d.len() < 2 {
                return Err(Error::Split(format!("{} windows cannot be split in two", d.len())));
            }
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.shuffle(&mut rng);
            for &i in &order[..split_count(d.len(), test_fraction)] {
                test_mask[i] = true;
            }
        }
        SplitMode::BySubject => {
            let mut subjects: Vec<&str> = d.subjects.iter().map(String::as_str).collect();
            subjects.sort_unstable();
            subjects.dedup();
            if subjects.len() < 2 {
                return Err(Error::Split(format!(
                    "by-subject split needs at least two subjects, found {}",
                    subjects.len()
                )));
            }
            subjects.shuffle(&mut rng);
            let held_out = &subjects[..split_count(subjects.len(), test_fraction)];
            for (i, s) in d.subjects.iter().enumerate() {
                test_mask[i] = held_out.contains(&s.as_str());
            }
        }
    }
    let test = (0..d.len()).filter(|&i| test_mask[i]).collect();
    let train = (0..d.len()).filter(|&i| !test_mask[i]).collect();
    Ok((train, test))
}

pub fn split_dataset(
    d: &WindowDataset,
    test_fraction: f64,
    seed: u64,
    mode: SplitMode,
) -> Result<(WindowDataset, WindowDataset)> {
    let (train, test) = split_indices(d, test_fraction, seed, mode)?;
    Ok((d.subset(&train), d.subset(&test)))
}
