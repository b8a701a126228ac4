//! Forward and reverse rules for every layer in the network, plus the loss
//! and a finite-difference gradient checker.
//!
//! All operations are pure functions of their arguments. Each backward rule
//! takes the cache produced by its forward call and returns gradients with the
//! same shapes as the parameters they belong to.

mod activation;
mod conv;
pub mod gradcheck;
pub mod init;
pub(crate) mod linalg;
mod linear;
mod loss;
mod lstm;
mod pool;

pub use activation::{relu, relu_backward};
pub use conv::{conv1d_backward, conv1d_forward, ConvParams};
pub use gradcheck::{finite_diff_gradcheck, relative_error, GradCheckConfig, GradCheckReport, GradTarget, TensorCheck};
pub use linear::{linear_backward, linear_forward, LinearParams};
pub use loss::{softmax, softmax_cross_entropy};
pub use lstm::{
    lstm_cell_backward, lstm_cell_forward, lstm_layer_backward, lstm_layer_forward, GateParams, LstmCellCache,
    LstmCellGrads, LstmLayerCache, LstmParams,
};
pub use pool::{maxpool1d, maxpool1d_backward, PoolIndices};

use crate::tensor::Tensor;

/// A fixed, ordered collection of named parameter tensors.
///
/// Gradients of a parameter set are stored in a value of the same type, so a
/// gradient entry exists for exactly the parameters that exist.
pub trait ParamSet {
    fn named(&self) -> Vec<(String, &Tensor)>;
    fn named_mut(&mut self) -> Vec<(String, &mut Tensor)>;

    /// Same structure with every tensor zeroed.
    fn zeros_like(&self) -> Self
    where
        Self: Clone,
    {
        let mut z = self.clone();
        for (_, t) in z.named_mut() {
            t.fill(0.0);
        }
        z
    }

    fn param_count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }
}

/// A lone tensor as a one-entry parameter set named `value`.
impl ParamSet for Tensor {
    fn named(&self) -> Vec<(String, &Tensor)> {
        vec![("value".to_string(), self)]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![("value".to_string(), self)]
    }
}

/// Parameter gradients together with the gradient of the layer input.
#[derive(Debug, Clone)]
pub struct GradBundle<P> {
    pub params: P,
    pub input: Tensor,
}
