use super::{check_rows, sq_dist, FlatDataset, Prediction};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct NearestCentroid {
    pub classes: usize,
    pub d: usize,
    pub centroids: Vec<f64>,
}

impl NearestCentroid {
    pub fn fit(train: &FlatDataset) -> Result<Self> {
        let counts = train.require_all_classes("nearest centroid")?;
        let mut centroids = vec![0.0; train.classes * train.d];
        for i in 0..train.n {
            let c = train.y[i];
            for (s, v) in centroids[c * train.d..(c + 1) * train.d].iter_mut().zip(train.row(i)) {
                *s += v;
            }
        }
        for (c, chunk) in centroids.chunks_mut(train.d).enumerate() {
            chunk.iter_mut().for_each(|s| *s /= counts[c] as f64);
        }
        Ok(NearestCentroid {
            classes: train.classes,
            d: train.d,
            centroids,
        })
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.d..(c + 1) * self.d]
    }

    /// Scores are negative Euclidean distances; ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let n = check_rows(x, self.d, "NearestCentroid::predict")?;
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n * self.classes);
        for row in x.chunks_exact(self.d) {
            let dist: Vec<f64> = (0..self.classes).map(|c| sq_dist(row, self.centroid(c))).collect();
            let best = (0..self.classes).fold(0, |b, c| if dist[c] < dist[b] { c } else { b });
            labels.push(best);
            scores.extend(dist.iter().map(|d| -d.sqrt()));
        }
        Ok(Prediction {
            classes: self.classes,
            labels,
            scores,
        })
    }
}

pub fn nearest_centroid_fit_predict(train: &FlatDataset, test_x: &[f64]) -> Result<Prediction> {
    NearestCentroid::fit(train)?.predict(test_x)
}
