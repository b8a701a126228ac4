//! Seeded parameter initialisation.
//!
//! * conv, linear and LSTM input maps: `U(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`
//! * LSTM recurrent maps: `U(-r, r)`, `r = sqrt(1 / hidden)`
//! * biases and peepholes: zero, except the forget-gate bias which is one
//!
//! Draw order within a layer: conv/linear weight; for LSTM gates in the order
//! input, forget, output, candidate, the input map then the recurrent map.

use rand::Rng;

use crate::engine::{ConvParams, GateParams, LinearParams, LstmParams};
use crate::tensor::Tensor;

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn recurrent_bound(hidden: usize) -> f64 {
    (1.0 / hidden as f64).sqrt()
}

pub fn init_conv<R: Rng + ?Sized>(in_channels: usize, out_channels: usize, k: usize, rng: &mut R) -> ConvParams {
    let bound = glorot_bound(in_channels * k, out_channels * k);
    ConvParams {
        weight: Tensor::uniform(&[out_channels, in_channels, k], bound, rng),
        bias: Tensor::zeros(&[out_channels]),
        padding: k.saturating_sub(1) / 2,
    }
}

pub fn init_linear<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> LinearParams {
    LinearParams {
        weight: Tensor::uniform(&[output, input], glorot_bound(input, output), rng),
        bias: Tensor::zeros(&[output]),
    }
}

pub fn init_lstm<R: Rng + ?Sized>(input: usize, hidden: usize, peephole: bool, rng: &mut R) -> LstmParams {
    let mut gate = |peep: bool, bias: f64| GateParams {
        input_weight: Tensor::uniform(&[hidden, input], glorot_bound(input, hidden), rng),
        recurrent_weight: Tensor::uniform(&[hidden, hidden], recurrent_bound(hidden), rng),
        peephole: peep.then(|| Tensor::zeros(&[hidden])),
        bias: Tensor::full(&[hidden], bias),
    };
    let input_gate = gate(peephole, 0.0);
    let forget_gate = gate(peephole, 1.0);
    let output_gate = gate(peephole, 0.0);
    let candidate = gate(false, 0.0);
    LstmParams {
        input_gate,
        forget_gate,
        output_gate,
        candidate,
    }
}
