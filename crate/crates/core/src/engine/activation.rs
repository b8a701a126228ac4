use crate::error::Result;
use crate::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Tensor::new(x.shape(), data).expect("shape preserved")
}

/// Passes `dy` where the forward input was strictly positive; zero elsewhere,
/// including at exactly zero.
pub fn relu_backward(x: &Tensor, dy: &Tensor) -> Result<Tensor> {
    dy.expect_shape("relu_backward", x.shape())?;
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(x.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_negatives() {
        let y = relu(&Tensor::from_vec(vec![-1.0, 0.0, 2.0]));
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn identity_on_nonnegatives() {
        let x = Tensor::from_vec(vec![0.0, 0.5, 3.0, 1e-300]);
        assert_eq!(relu(&x), x);
    }

    #[test]
    fn subgradient_at_zero_is_zero() {
        let x = Tensor::from_vec(vec![-1.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::from_vec(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
    }
}
