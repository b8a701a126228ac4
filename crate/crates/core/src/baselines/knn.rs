use super::{check_rows, sq_dist, FlatDataset, Prediction};
use crate::error::{Error, Result};

/// Stores the training set; prediction scans every training row.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    pub k: usize,
    pub train: FlatDataset,
}

impl Knn {
    pub fn fit(train: &FlatDataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.n {
            return Err(Error::Param(format!("k = {k} must be in 1..={}", train.n)));
        }
        Ok(Knn {
            k,
            train: train.clone(),
        })
    }

    /// Indices of the k nearest training rows, ordered by distance then index.
    pub fn neighbors(&self, row: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = (0..self.train.n)
            .map(|i| (sq_dist(row, self.train.row(i)), i))
            .collect();
        let k = self.k;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority vote; among tied classes the one whose member is nearest wins.
    /// Scores are vote fractions.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let d = self.train.d;
        let classes = self.train.classes;
        let n = check_rows(x, d, "Knn::predict")?;
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n * classes);
        for row in x.chunks_exact(d) {
            let nb = self.neighbors(row);
            let mut votes = vec![0usize; classes];
            for &i in &nb {
                votes[self.train.y[i]] += 1;
            }
            let top = *votes.iter().max().expect("classes > 0");
            let label = nb
                .iter()
                .map(|&i| self.train.y[i])
                .find(|&c| votes[c] == top)
                .expect("a neighbour carries the top vote");
            labels.push(label);
            scores.extend(votes.iter().map(|&v| v as f64 / self.k as f64));
        }
        Ok(Prediction {
            classes,
            labels,
            scores,
        })
    }
}

pub fn knn_fit_predict(train: &FlatDataset, test_x: &[f64], k: usize) -> Result<Prediction> {
    Knn::fit(train, k)?.predict(test_x)
}
