use super::{check_rows, FlatDataset, Prediction};
use crate::error::Result;

/// Per-class diagonal Gaussians. Every class variance is smoothed by
/// `1e-9 × (largest per-feature variance of the whole training set)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    pub classes: usize,
    pub d: usize,
    pub log_prior: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub epsilon: f64,
}

fn moments(rows: impl Iterator<Item = usize> + Clone, ds: &FlatDataset) -> (Vec<f64>, Vec<f64>) {
    let d = ds.d;
    let mut mean = vec![0.0; d];
    let mut n = 0usize;
    for i in rows.clone() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(ds.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for i in rows {
        for ((s, v), m) in var.iter_mut().zip(ds.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n as f64);
    (mean, var)
}

impl GaussianNb {
    pub fn fit(train: &FlatDataset) -> Result<Self> {
        let counts = train.require_all_classes("gaussian naive Bayes")?;
        let (_, all_var) = moments(0..train.n, train);
        let epsilon = 1e-9 * all_var.iter().cloned().fold(0.0, f64::max);
        let mut mean = Vec::with_capacity(train.classes * train.d);
        let mut var = Vec::with_capacity(train.classes * train.d);
        for c in 0..train.classes {
            let rows = (0..train.n).filter(|&i| train.y[i] == c);
            let (m, v) = moments(rows, train);
            mean.extend(m);
            var.extend(v.into_iter().map(|v| v + epsilon));
        }
        let log_prior = counts.iter().map(|&n| (n as f64 / train.n as f64).ln()).collect();
        Ok(GaussianNb {
            classes: train.classes,
            d: train.d,
            log_prior,
            mean,
            var,
            epsilon,
        })
    }

    /// Unnormalised log joint `log p(c) + log p(x | c)` for each class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let mu = &self.mean[c * self.d..(c + 1) * self.d];
                let var = &self.var[c * self.d..(c + 1) * self.d];
                let mut ll = 0.0;
                for ((v, m), s) in x.iter().zip(mu).zip(var) {
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s);
                }
                self.log_prior[c] + ll
            })
            .collect()
    }

    /// Scores are log-posteriors (log-sum-exp normalised); ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let n = check_rows(x, self.d, "GaussianNb::predict")?;
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n * self.classes);
        for row in x.chunks_exact(self.d) {
            let jll = self.joint_log_likelihood(row);
            let (best, max) = jll.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (c, &v)| if v > acc.1 { (c, v) } else { acc },
            );
            let lse = max + jll.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            labels.push(best);
            scores.extend(jll.iter().map(|v| v - lse));
        }
        Ok(Prediction {
            classes: self.classes,
            labels,
            scores,
        })
    }
}

pub fn gaussian_nb_fit_predict(train: &FlatDataset, test_x: &[f64]) -> Result<Prediction> {
    GaussianNb::fit(train)?.predict(test_x)
}
