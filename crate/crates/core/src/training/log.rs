use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Counted from 1.
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's training windows.
    pub train_loss: f64,
    /// Fraction of training windows classified correctly in the epoch's own
    /// forward passes, before each batch's update.
    pub train_acc: f64,
    /// Accuracy on the held-out split after the epoch, if one was given.
    pub test_acc: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,test_acc,seconds";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Floats use the shortest representation that reads back exactly; a
    /// missing test accuracy is an empty field.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let test = r.test_acc.map(|v| v.to_string()).unwrap_or_default();
            writeln!(s, "{},{},{},{},{}", r.epoch, r.train_loss, r.train_acc, test, r.seconds)
                .expect("write to string");
        }
        s
    }

    /// Same records with wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> TrainLog {
        TrainLog {
            records: self
                .records
                .iter()
                .map(|r| EpochRecord {
                    seconds: 0.0,
                    ..r.clone()
                })
                .collect(),
        }
    }
}
