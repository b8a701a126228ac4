use crate::engine::{GradBundle, ParamSet};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One-dimensional convolution over `[batch, channels, length]` input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    /// `[out_channels, in_channels, k]`
    pub weight: Tensor,
    /// `[out_channels]`
    pub bias: Tensor,
    /// Zero samples added on each side of the input.
    pub padding: usize,
}

impl ConvParams {
    /// Zero-initialised parameters with same-length padding for odd `k`.
    pub fn zeros(in_channels: usize, out_channels: usize, k: usize) -> Self {
        ConvParams {
            weight: Tensor::zeros(&[out_channels, in_channels, k]),
            bias: Tensor::zeros(&[out_channels]),
            padding: k.saturating_sub(1) / 2,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dim(0)
    }

    pub fn in_channels(&self) -> usize {
        self.weight.dim(1)
    }

    pub fn kernel(&self) -> usize {
        self.weight.dim(2)
    }

    pub fn output_len(&self, input_len: usize) -> Option<usize> {
        (input_len + 2 * self.padding + 1).checked_sub(self.kernel())
    }

    fn validate(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        if self.weight.rank() != 3 || self.kernel() == 0 {
            return Err(Error::Param(format!(
                "conv weight must be [out, in, k>=1], got {:?}",
                self.weight.shape()
            )));
        }
        self.bias.expect_shape("conv1d bias", &[self.out_channels()])?;
        if x.rank() != 3 || x.dim(1) != self.in_channels() {
            return Err(Error::dim(
                "conv1d",
                &[x.shape().first().copied().unwrap_or(0), self.in_channels(), 0],
                x.shape(),
            ));
        }
        let len = x.dim(2);
        let out_len = self
            .output_len(len)
            .filter(|&l| l > 0)
            .ok_or(Error::EmptyOutput("conv1d"))?;
        Ok((x.dim(0), len, out_len))
    }
}

impl ParamSet for ConvParams {
    fn named(&self) -> Vec<(String, &Tensor)> {
        vec![("W".into(), &self.weight), ("b".into(), &self.bias)]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![("W".into(), &mut self.weight), ("b".into(), &mut self.bias)]
    }
}

/// `y[b,o,i] = bias[o] + Σ_c Σ_j xpad[b,c,i+j] · w[o,c,j]`; linear, no activation.
pub fn conv1d_forward(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let (batch, len, out_len) = p.validate(x)?;
    let (cout, cin, k) = (p.out_channels(), p.in_channels(), p.kernel());
    let pad = p.padding as isize;
    let w = p.weight.data();
    let xd = x.data();
    let mut y = vec![0.0; batch * cout * out_len];

    for b in 0..batch {
        for o in 0..cout {
            let yrow = &mut y[(b * cout + o) * out_len..(b * cout + o + 1) * out_len];
            yrow.fill(p.bias.data()[o]);
            for c in 0..cin {
                let xrow = &xd[(b * cin + c) * len..(b * cin + c + 1) * len];
                for j in 0..k {
                    let wv = w[(o * cin + c) * k + j];
                    let shift = j as isize - pad;
                    let (lo, hi) = valid_range(shift, len, out_len);
                    for i in lo..hi {
                        yrow[i] += wv * xrow[(i as isize + shift) as usize];
                    }
                }
            }
        }
    }
    Tensor::new(&[batch, cout, out_len], y)
}

/// Gradients of a scalar loss with respect to weight, bias and input, given
/// the upstream gradient `dy` of the forward output.
pub fn conv1d_backward(x: &Tensor, p: &ConvParams, dy: &Tensor) -> Result<GradBundle<ConvParams>> {
    let (batch, len, out_len) = p.validate(x)?;
    let (cout, cin, k) = (p.out_channels(), p.in_channels(), p.kernel());
    dy.expect_shape("conv1d_backward", &[batch, cout, out_len])?;
    let pad = p.padding as isize;
    let w = p.weight.data();
    let xd = x.data();
    let dyd = dy.data();

    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; cout];
    let mut dx = vec![0.0; xd.len()];

    for b in 0..batch {
        for o in 0..cout {
            let dyrow = &dyd[(b * cout + o) * out_len..(b * cout + o + 1) * out_len];
            db[o] += dyrow.iter().sum::<f64>();
            for c in 0..cin {
                let base = (b * cin + c) * len;
                for j in 0..k {
                    let wi = (o * cin + c) * k + j;
                    let shift = j as isize - pad;
                    let (lo, hi) = valid_range(shift, len, out_len);
                    let mut acc = 0.0;
                    for i in lo..hi {
                        let xi = base + (i as isize + shift) as usize;
                        acc += dyrow[i] * xd[xi];
                        dx[xi] += w[wi] * dyrow[i];
                    }
                    dw[wi] += acc;
                }
            }
        }
    }

    Ok(GradBundle {
        params: ConvParams {
            weight: Tensor::new(p.weight.shape(), dw)?,
            bias: Tensor::new(&[cout], db)?,
            padding: p.padding,
        },
        input: Tensor::new(x.shape(), dx)?,
    })
}

/// Output positions `i` for which `i + shift` indexes the unpadded input.
fn valid_range(shift: isize, len: usize, out_len: usize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = ((len as isize - shift).max(0) as usize).min(out_len);
    (lo.min(hi), hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: Vec<f64>, shape: [usize; 3], bias: Vec<f64>, padding: usize) -> ConvParams {
        ConvParams {
            weight: Tensor::new(&shape, w).unwrap(),
            bias: Tensor::from_vec(bias),
            padding,
        }
    }

    /// Direct summation with an explicitly zero-padded copy of the input.
    fn oracle(x: &[f64], w: &[f64], bias: f64, padding: usize) -> Vec<f64> {
        let k = w.len();
        let mut xp = vec![0.0; padding];
        xp.extend_from_slice(x);
        xp.extend(std::iter::repeat(0.0).take(padding));
        (0..xp.len() + 1 - k)
            .map(|i| (0..k).map(|j| xp[i + j] * w[j]).sum::<f64>() + bias)
            .collect()
    }

    #[test]
    fn zero_input_yields_bias() {
        let p = params(vec![0.3, -1.2, 2.0], [1, 1, 3], vec![0.7], 1);
        let y = conv1d_forward(&Tensor::zeros(&[1, 1, 4]), &p).unwrap();
        assert_eq!(y.data(), &[0.7; 4]);
    }

    #[test]
    fn identity_kernel() {
        let p = params(vec![1.0], [1, 1, 1], vec![0.0], 0);
        let x = Tensor::new(&[1, 1, 3], vec![1., 2., 3.]).unwrap();
        assert_eq!(conv1d_forward(&x, &p).unwrap().data(), &[1., 2., 3.]);
    }

    #[test]
    fn difference_kernel_matches_direct_summation() {
        let w = vec![1.0, 0.0, -1.0];
        let x = [1.0, 2.0, 3.0, 4.0];
        let expected = oracle(&x, &w, 0.0, 1);
        assert_eq!(expected, vec![-2.0, -2.0, -2.0, 3.0]);
        let p = params(w, [1, 1, 3], vec![0.0], 1);
        let y = conv1d_forward(&Tensor::new(&[1, 1, 4], x.to_vec()).unwrap(), &p).unwrap();
        assert_eq!(y.data(), expected.as_slice());
    }

    #[test]
    fn same_padding_preserves_length() {
        let p = ConvParams::zeros(8, 16, 3);
        let y = conv1d_forward(&Tensor::zeros(&[2, 8, 150]), &p).unwrap();
        assert_eq!(y.shape(), &[2, 16, 150]);
    }

    #[test]
    fn channel_mismatch_is_a_dimension_error() {
        let p = ConvParams::zeros(3, 2, 3);
        let err = conv1d_forward(&Tensor::zeros(&[1, 4, 5]), &p).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }), "{err}");
        let dy = Tensor::zeros(&[1, 2, 4]);
        assert!(conv1d_backward(&Tensor::zeros(&[1, 3, 5]), &p, &dy).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = params((0..6).map(|i| i as f64).collect(), [2, 1, 3], vec![0.1, 0.2], 1);
        let x = Tensor::new(&[1, 1, 5], vec![1., -2., 3., 0.5, 2.]).unwrap();
        let g = conv1d_backward(&x, &p, &Tensor::zeros(&[1, 2, 5])).unwrap();
        assert_eq!(g.params.weight.max_abs(), 0.0);
        assert_eq!(g.params.bias.max_abs(), 0.0);
        assert_eq!(g.input.max_abs(), 0.0);
    }

    #[test]
    fn unit_upstream_bias_gradient_counts_outputs() {
        let p = ConvParams::zeros(3, 4, 3);
        let x = Tensor::full(&[2, 3, 8], 0.5);
        let g = conv1d_backward(&x, &p, &Tensor::full(&[2, 4, 8], 1.0)).unwrap();
        assert_eq!(g.params.bias.data(), &[16.0; 4]);
    }
}
