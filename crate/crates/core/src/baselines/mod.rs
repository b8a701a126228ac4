//! Classical classifiers over flattened windows.

mod centroid;
mod knn;
mod naive_bayes;
mod tree;

pub use centroid::{nearest_centroid_fit_predict, NearestCentroid};
pub use knn::{knn_fit_predict, Knn};
pub use naive_bayes::{gaussian_nb_fit_predict, GaussianNb};
pub use tree::{decision_tree_fit_predict, DecisionTree, TreeNode};

use serde::{Deserialize, Serialize};

use crate::dataset::WindowDataset;
use crate::error::{Error, Result};

/// `n × d` row-major feature matrix with labels in `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatDataset {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub x: Vec<f64>,
    pub y: Vec<usize>,
}

impl FlatDataset {
    pub fn new(x: Vec<f64>, y: Vec<usize>, d: usize, classes: usize) -> Result<Self> {
        let n = y.len();
        if d == 0 || x.len() != n * d {
            return Err(Error::dim("FlatDataset::new", &[n, d], &[x.len()]));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= classes) {
            return Err(Error::Label { label, classes });
        }
        Ok(FlatDataset { n, d, classes, x, y })
    }

    /// Each window becomes one `channels·length` row in channel-major order.
    pub fn from_windows(w: &WindowDataset, classes: usize) -> Result<Self> {
        FlatDataset::new(w.values.clone(), w.labels_usize(), w.window_size(), classes)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub(crate) fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    pub(crate) fn require_all_classes(&self, who: &str) -> Result<Vec<usize>> {
        let counts = self.class_counts();
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Fit(format!("{who}: class {c} has no training examples")));
        }
        Ok(counts)
    }
}

/// Predicted labels plus an `n × classes` row-major score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub classes: usize,
    pub labels: Vec<usize>,
    pub scores: Vec<f64>,
}

pub(crate) fn check_rows(x: &[f64], d: usize, op: &'static str) -> Result<usize> {
    if d == 0 || x.len() % d != 0 {
        return Err(Error::dim(op, &[d], &[x.len()]));
    }
    Ok(x.len() / d)
}

/// Squared Euclidean distance summed left to right.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    NaiveBayes,
    NearestCentroid,
    DecisionTree { max_depth: Option<usize> },
    Knn { k: usize },
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::NaiveBayes => "naive_bayes",
            BaselineKind::NearestCentroid => "nearest_centroid",
            BaselineKind::DecisionTree { .. } => "decision_tree",
            BaselineKind::Knn { .. } => "knn",
        }
    }
}

pub fn fit_predict(kind: BaselineKind, train: &FlatDataset, test_x: &[f64]) -> Result<Prediction> {
    match kind {
        BaselineKind::NaiveBayes => gaussian_nb_fit_predict(train, test_x),
        BaselineKind::NearestCentroid => nearest_centroid_fit_predict(train, test_x),
        BaselineKind::DecisionTree { max_depth } => decision_tree_fit_predict(train, test_x, max_depth),
        BaselineKind::Knn { k } => knn_fit_predict(train, test_x, k),
    }
}
