use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Positions selected by a max-pool forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    /// Flat index into the input for every output element.
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Non-overlapping max pooling with window and stride `pool`. A trailing
/// partial window is dropped; ties pick the lowest index.
pub fn maxpool1d(x: &Tensor, pool: usize) -> Result<(Tensor, PoolIndices)> {
    if pool == 0 {
        return Err(Error::Param("pool size must be at least 1".into()));
    }
    if x.rank() != 3 {
        return Err(Error::dim("maxpool1d", &[0, 0, 0], x.shape()));
    }
    let (batch, ch, len) = (x.dim(0), x.dim(1), x.dim(2));
    let out_len = len / pool;
    if out_len == 0 {
        return Err(Error::EmptyOutput("maxpool1d"));
    }
    let xd = x.data();
    let mut y = Vec::with_capacity(batch * ch * out_len);
    let mut argmax = Vec::with_capacity(batch * ch * out_len);
    for row in 0..batch * ch {
        let base = row * len;
        for i in 0..out_len {
            let start = base + i * pool;
            let mut best = start;
            for j in start + 1..start + pool {
                if xd[j] > xd[best] {
                    best = j;
                }
            }
            y.push(xd[best]);
            argmax.push(best);
        }
    }
    Ok((
        Tensor::new(&[batch, ch, out_len], y)?,
        PoolIndices {
            input_shape: x.shape().to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool1d_backward(indices: &PoolIndices, dy: &Tensor) -> Result<Tensor> {
    if dy.len() != indices.argmax.len() {
        return Err(Error::dim("maxpool1d_backward", &[indices.argmax.len()], &[dy.len()]));
    }
    let mut dx = Tensor::zeros(&indices.input_shape);
    let d = dx.data_mut();
    for (&i, &g) in indices.argmax.iter().zip(dy.data()) {
        d[i] += g;
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool1(x: Vec<f64>, p: usize) -> Result<Vec<f64>> {
        let n = x.len();
        maxpool1d(&Tensor::new(&[1, 1, n], x).unwrap(), p).map(|(y, _)| y.into_data())
    }

    #[test]
    fn picks_window_maxima() {
        assert_eq!(pool1(vec![1., 3., 2., 0.], 2).unwrap(), vec![3., 2.]);
    }

    #[test]
    fn constant_input_stays_constant() {
        assert_eq!(pool1(vec![4.0; 7], 2).unwrap(), vec![4.0; 3]);
    }

    #[test]
    fn trailing_partial_window_dropped() {
        assert_eq!(pool1(vec![5., 1., 4.], 2).unwrap(), vec![5.]);
    }

    #[test]
    fn too_short_is_an_error() {
        assert!(matches!(pool1(vec![1.0], 2), Err(Error::EmptyOutput(_))));
        assert!(pool1(vec![1.0], 0).is_err());
    }

    #[test]
    fn two_pools_on_150_give_37() {
        let (y, _) = maxpool1d(&Tensor::zeros(&[1, 1, 150]), 2).unwrap();
        let (y, _) = maxpool1d(&y, 2).unwrap();
        assert_eq!(y.dim(2), 37);
    }

    #[test]
    fn ties_route_gradient_to_lowest_index() {
        let x = Tensor::new(&[1, 1, 4], vec![2., 2., 1., 1.]).unwrap();
        let (_, idx) = maxpool1d(&x, 2).unwrap();
        assert_eq!(idx.argmax(), &[0, 2]);
        let dx = maxpool1d_backward(&idx, &Tensor::new(&[1, 1, 2], vec![1., 3.]).unwrap()).unwrap();
        assert_eq!(dx.data(), &[1., 0., 3., 0.]);
    }
}
