use crate::engine::linalg::{matmul_acc, matmul_at_acc, matmul_bt_acc};
use crate::engine::{GradBundle, ParamSet};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// `[out, in]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl LinearParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        LinearParams {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
        }
    }

    fn dims(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        let (dout, din) = (self.weight.dim(0), self.weight.dim(1));
        self.bias.expect_shape("linear bias", &[dout])?;
        if x.rank() != 2 || x.dim(1) != din {
            return Err(Error::dim(
                "linear",
                &[x.shape().first().copied().unwrap_or(0), din],
                x.shape(),
            ));
        }
        Ok((x.dim(0), din, dout))
    }
}

impl ParamSet for LinearParams {
    fn named(&self) -> Vec<(String, &Tensor)> {
        vec![("W".into(), &self.weight), ("b".into(), &self.bias)]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![("W".into(), &mut self.weight), ("b".into(), &mut self.bias)]
    }
}

/// `y = x Wᵀ + b`
pub fn linear_forward(x: &Tensor, p: &LinearParams) -> Result<Tensor> {
    let (batch, din, dout) = p.dims(x)?;
    let mut y = Vec::with_capacity(batch * dout);
    for _ in 0..batch {
        y.extend_from_slice(p.bias.data());
    }
    matmul_bt_acc(x.data(), p.weight.data(), &mut y, batch, din, dout);
    Tensor::new(&[batch, dout], y)
}

pub fn linear_backward(x: &Tensor, p: &LinearParams, dy: &Tensor) -> Result<GradBundle<LinearParams>> {
    let (batch, din, dout) = p.dims(x)?;
    dy.expect_shape("linear_backward", &[batch, dout])?;
    let mut dw = vec![0.0; dout * din];
    matmul_at_acc(dy.data(), x.data(), &mut dw, batch, dout, din);
    let mut db = vec![0.0; dout];
    for row in dy.data().chunks_exact(dout) {
        for (d, g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
    let mut dx = vec![0.0; batch * din];
    matmul_acc(dy.data(), p.weight.data(), &mut dx, batch, dout, din);
    Ok(GradBundle {
        params: LinearParams {
            weight: Tensor::new(&[dout, din], dw)?,
            bias: Tensor::new(&[dout], db)?,
        },
        input: Tensor::new(&[batch, din], dx)?,
    })
}
