use serde::{Deserialize, Serialize};

use crate::engine::ParamSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} = {b} must lie in [0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        Ok(())
    }
}

/// First and second moments for every parameter, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub names: Vec<String>,
    pub first: Vec<Tensor>,
    pub second: Vec<Tensor>,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P) -> Self {
        let named = params.named();
        AdamState {
            step: 0,
            names: named.iter().map(|(n, _)| n.clone()).collect(),
            first: named.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect(),
            second: named.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect(),
        }
    }
}

/// One Adam update. All gradients are checked before any parameter moves, so
/// a non-finite gradient leaves `params` and `state` untouched.
pub fn adam_step<P: ParamSet>(params: &mut P, grads: &P, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    let grads = grads.named();
    if grads.len() != state.names.len() {
        return Err(Error::Contract(format!(
            "optimizer tracks {} tensors, gradient set has {}",
            state.names.len(),
            grads.len()
        )));
    }
    for ((name, g), (expected, m)) in grads.iter().zip(state.names.iter().zip(&state.first)) {
        if name != expected || g.shape() != m.shape() {
            return Err(Error::Contract(format!(
                "gradient {name} {:?} does not match optimizer slot {expected} {:?}",
                g.shape(),
                m.shape()
            )));
        }
        if let Some(i) = g.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {name} at flat index {i}")));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    for (k, (_, p)) in params.named_mut().into_iter().enumerate() {
        let g = grads[k].1.data();
        let m = state.first[k].data_mut();
        for (mi, gi) in m.iter_mut().zip(g) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
        }
        let v = state.second[k].data_mut();
        for (vi, gi) in v.iter_mut().zip(g) {
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
        }
        let (m, v) = (state.first[k].data(), state.second[k].data());
        for ((pi, mi), vi) in p.data_mut().iter_mut().zip(m).zip(v) {
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            *pi -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
