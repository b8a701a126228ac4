use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax - onehot) / batch` with respect to the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    if logits.rank() != 2 || logits.dim(0) != labels.len() {
        return Err(Error::dim("softmax_cross_entropy", &[labels.len(), 0], logits.shape()));
    }
    let (batch, classes) = (logits.dim(0), logits.dim(1));
    if batch == 0 {
        return Err(Error::EmptyOutput("softmax_cross_entropy"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Label { label: bad, classes });
    }
    let inv_batch = 1.0 / batch as f64;
    let mut grad = Vec::with_capacity(batch * classes);
    let mut loss = 0.0;
    for (row, &label) in logits.data().chunks_exact(classes).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - row[label];
        for (c, &z) in row.iter().enumerate() {
            let p = (z - lse).exp();
            let onehot = if c == label { 1.0 } else { 0.0 };
            grad.push((p - onehot) * inv_batch);
        }
    }
    Ok((loss * inv_batch, Tensor::new(&[batch, classes], grad)?))
}

/// Row-wise softmax probabilities.
pub fn softmax(logits: &Tensor) -> Tensor {
    let classes = logits.dim(logits.rank() - 1);
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(classes) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / sum));
    }
    Tensor::new(logits.shape(), out).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_k() {
        for label in 0..4 {
            let (loss, _) = softmax_cross_entropy(&Tensor::zeros(&[1, 4]), &[label]).unwrap();
            assert!((loss - 4f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn confident_correct_logit() {
        let logits = Tensor::new(&[1, 4], vec![10., 0., 0., 0.]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[0]).unwrap();
        let expected = (3.0 * (-10f64).exp()).ln_1p();
        assert!((loss - expected).abs() < 1e-15);
        assert!((loss - 1.362e-4).abs() < 1e-7);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let logits = Tensor::new(&[1, 3], vec![1000., -1000., 0.]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!(loss.is_finite() && (loss - 2000.0).abs() < 1e-9);
        assert!(grad.is_finite());
    }

    #[test]
    fn out_of_range_label() {
        let err = softmax_cross_entropy(&Tensor::zeros(&[2, 4]), &[0, 4]).unwrap_err();
        assert!(matches!(err, Error::Label { label: 4, classes: 4 }));
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits = Tensor::new(&[2, 3], vec![0.3, -1.0, 2.0, 5.0, 5.0, -5.0]).unwrap();
        let (_, g) = softmax_cross_entropy(&logits, &[2, 0]).unwrap();
        for row in g.data().chunks(3) {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
        let p = softmax(&logits);
        assert!((p.data()[..3].iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
