//! Central finite-difference verification of analytic gradients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `|a - n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Perturbation `h` in `(f(x+h) - f(x-h)) / 2h`.
    pub step: f64,
    pub tolerance: f64,
    /// Check at most this many entries per tensor, chosen with `seed`.
    pub max_entries: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-6,
            max_entries: None,
            seed: 0,
        }
    }
}

/// A tensor whose analytic gradient is checked.
#[derive(Debug, Clone)]
pub struct GradTarget {
    pub name: String,
    pub value: Tensor,
    pub analytic: Tensor,
    /// Entries to skip, e.g. inputs sitting on a ReLU kink.
    pub skip: Vec<bool>,
}

impl GradTarget {
    pub fn new(name: impl Into<String>, value: Tensor, analytic: Tensor) -> Self {
        let skip = vec![false; value.len()];
        GradTarget {
            name: name.into(),
            value,
            analytic,
            skip,
        }
    }

    pub fn skipping(mut self, skip: Vec<bool>) -> Self {
        self.skip = skip;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.tensors.iter().all(|t| t.max_rel_error <= self.tolerance)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TensorCheck> {
        self.tensors.iter().filter(move |t| t.max_rel_error > self.tolerance)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }
}

/// Compares each target's analytic gradient against central differences of
/// `loss`, which receives the current values of all targets in order.
pub fn finite_diff_gradcheck<F>(targets: &[GradTarget], mut loss: F, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if !(cfg.step > 0.0) {
        return Err(Error::Param(format!(
            "finite-difference step must be positive, got {}",
            cfg.step
        )));
    }
    for t in targets {
        t.analytic.expect_shape("gradcheck analytic", t.value.shape())?;
        if t.skip.len() != t.value.len() {
            return Err(Error::dim("gradcheck skip mask", &[t.value.len()], &[t.skip.len()]));
        }
    }
    let mut values: Vec<Tensor> = targets.iter().map(|t| t.value.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tensors = Vec::with_capacity(targets.len());

    for (ti, target) in targets.iter().enumerate() {
        let mut idx: Vec<usize> = (0..target.value.len()).filter(|&i| !target.skip[i]).collect();
        if let Some(m) = cfg.max_entries {
            if idx.len() > m {
                idx.shuffle(&mut rng);
                idx.truncate(m);
                idx.sort_unstable();
            }
        }
        let mut check = TensorCheck {
            name: target.name.clone(),
            checked: idx.len(),
            max_rel_error: 0.0,
            worst_index: None,
            analytic_at_worst: 0.0,
            numeric_at_worst: 0.0,
        };
        for &i in &idx {
            let orig = values[ti].data()[i];
            values[ti].data_mut()[i] = orig + cfg.step;
            let plus = eval(&mut loss, &values, &target.name)?;
            values[ti].data_mut()[i] = orig - cfg.step;
            let minus = eval(&mut loss, &values, &target.name)?;
            values[ti].data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * cfg.step);
            let analytic = target.analytic.data()[i];
            let err = relative_error(analytic, numeric);
            if check.worst_index.is_none() || err > check.max_rel_error {
                check.max_rel_error = err;
                check.worst_index = Some(i);
                check.analytic_at_worst = analytic;
                check.numeric_at_worst = numeric;
            }
        }
        tensors.push(check);
    }
    Ok(GradCheckReport {
        tolerance: cfg.tolerance,
        tensors,
    })
}

fn eval<F>(loss: &mut F, values: &[Tensor], name: &str) -> Result<f64>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    let v = loss(values)?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("loss while perturbing {name}")));
    }
    Ok(v)
}
