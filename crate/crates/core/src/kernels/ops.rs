//! Activations, the masked softmax cross-entropy loss, and inverted dropout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::DenseMatrix;
use crate::rng::seeded_rng;

/// ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise.
pub fn elu(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| if v > 0.0 { v } else { v.exp() - 1.0 })
}

/// Derivative of [`elu`] w.r.t. its input.
pub fn elu_grad(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| if v > 0.0 { 1.0 } else { v.exp() })
}

/// Numerically stable row softmax (subtracts each row's max).
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(logits.cols()) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean negative log-likelihood over the masked rows, and its gradient
/// w.r.t. the logits: (softmax - onehot) / |mask| on masked rows, zero
/// elsewhere.
pub fn masked_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if labels.len() != logits.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    let classes = logits.cols();
    let inv = 1.0 / mask.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), classes);
    let mut loss = 0.0;
    for &v in mask {
        if v >= logits.rows() {
            return Err(Error::IndexOutOfRange {
                node: v,
                num_nodes: logits.rows(),
            });
        }
        let row = logits.row(v);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let log_sum = row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        loss -= (row[labels[v]] - max) - log_sum;
        // Accumulate so a node repeated in the mask contributes once per
        // occurrence, matching the loss normalization.
        let grad_row = grad.row_mut(v);
        for (g, &x) in grad_row.iter_mut().zip(row) {
            *g += (x - max - log_sum).exp() * inv;
        }
        grad_row[labels[v]] -= inv;
    }
    Ok((loss * inv, grad))
}

/// Multiplicative keep mask produced by a training-mode dropout pass.
/// Entries are 0 (dropped) or 1 (kept); `scale` is 1/(1 - rate).
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub kept: DenseMatrix,
    pub scale: f64,
}

impl DropoutMask {
    /// Applies the saved mask to a gradient flowing back through dropout.
    pub fn apply(&self, grad: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = grad.hadamard(&self.kept)?;
        out.scale_in_place(self.scale);
        Ok(out)
    }
}

/// Inverted dropout. In training mode each entry is zeroed independently
/// with probability `rate` and survivors are scaled by 1/(1 - rate); in
/// eval mode this is the identity with an all-ones mask.
pub fn dropout(x: &DenseMatrix, rate: f64, seed: u64, training: bool) -> (DenseMatrix, DropoutMask) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if !training || rate == 0.0 {
        let kept = DenseMatrix::zeros(x.rows(), x.cols()).map(|_| 1.0);
        return (
            x.clone(),
            DropoutMask { kept, scale: 1.0 },
        );
    }
    let scale = 1.0 / (1.0 - rate);
    let mut rng = seeded_rng(seed);
    let mut kept = DenseMatrix::zeros(x.rows(), x.cols());
    let mut out = x.clone();
    for (k, o) in kept.data_mut().iter_mut().zip(out.data_mut()) {
        if rng.random::<f64>() < rate {
            *o = 0.0;
        } else {
            *k = 1.0;
            *o *= scale;
        }
    }
    (out, DropoutMask { kept, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn elu_hand_values() {
        let x = DenseMatrix::from_vec(1, 3, vec![0.0, 1.0, -1.0]).unwrap();
        let y = elu(&x);
        assert_eq!(y.get(0, 0), 0.0);
        assert_eq!(y.get(0, 1), 1.0);
        assert!((y.get(0, 2) - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((y.get(0, 2) + 0.63212).abs() < 1e-5);
    }

    #[test]
    fn elu_grad_matches_central_differences() {
        let h = 1e-6;
        for &v in &[-2.0, -0.5, 0.5, 2.0] {
            let up = elu(&DenseMatrix::from_vec(1, 1, vec![v + h]).unwrap()).get(0, 0);
            let down = elu(&DenseMatrix::from_vec(1, 1, vec![v - h]).unwrap()).get(0, 0);
            let numeric = (up - down) / (2.0 * h);
            let analytic = elu_grad(&DenseMatrix::from_vec(1, 1, vec![v]).unwrap()).get(0, 0);
            assert!((numeric - analytic).abs() < 1e-6, "x = {v}");
        }
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let mut rng = crate::rng::seeded_rng(3);
        let data: Vec<f64> = (0..6 * 5).map(|_| rng.random_range(-30.0..30.0)).collect();
        let p = softmax_rows(&DenseMatrix::from_vec(6, 5, data).unwrap());
        for row in p.data().chunks_exact(5) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn uniform_logits_give_ln_c_loss() {
        let logits = DenseMatrix::zeros(4, 7);
        let labels = vec![0, 3, 5, 6];
        let (loss, _) = masked_cross_entropy(&logits, &labels, &[0, 1, 2, 3]).unwrap();
        assert!((loss - (7.0f64).ln()).abs() < 1e-12);
        assert!((loss - 1.94591).abs() < 1e-5);
    }

    #[test]
    fn saturated_logits_give_zero_loss() {
        let mut logits = DenseMatrix::zeros(2, 4);
        logits.set(0, 1, 1000.0);
        logits.set(1, 2, 1000.0);
        let (loss, _) = masked_cross_entropy(&logits, &[1, 2], &[0, 1]).unwrap();
        assert!(loss.abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_grad_matches_finite_differences() {
        let mut rng = crate::rng::seeded_rng(17);
        let data: Vec<f64> = (0..6 * 4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let logits = DenseMatrix::from_vec(6, 4, data).unwrap();
        let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
        let mask = vec![0, 2, 3, 5];
        let (_, grad) = masked_cross_entropy(&logits, &labels, &mask).unwrap();

        let h = 1e-5;
        for i in 0..6 {
            for j in 0..4 {
                let mut up = logits.clone();
                up.set(i, j, up.get(i, j) + h);
                let mut down = logits.clone();
                down.set(i, j, down.get(i, j) - h);
                let (lu, _) = masked_cross_entropy(&up, &labels, &mask).unwrap();
                let (ld, _) = masked_cross_entropy(&down, &labels, &mask).unwrap();
                let numeric = (lu - ld) / (2.0 * h);
                let denom = numeric.abs().max(1e-8);
                assert!(
                    (numeric - grad.get(i, j)).abs() / denom < 1e-6,
                    "grad mismatch at ({i}, {j}): fd {numeric} vs {}",
                    grad.get(i, j)
                );
            }
        }
    }

    #[test]
    fn empty_mask_is_an_error() {
        let logits = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            masked_cross_entropy(&logits, &[0, 1], &[]),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn dropout_identities() {
        let x = DenseMatrix::from_vec(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let (y, mask) = dropout(&x, 0.0, 1, true);
        assert_eq!(y, x);
        assert_eq!(mask.scale, 1.0);
        let (y, mask) = dropout(&x, 0.9, 1, false);
        assert_eq!(y, x);
        assert!(mask.kept.data().iter().all(|&k| k == 1.0));
    }

    #[test]
    fn dropout_keeps_about_half_and_preserves_mean() {
        let n = 10_000;
        let x = DenseMatrix::from_vec(100, 100, vec![1.0; n]).unwrap();
        let (y, mask) = dropout(&x, 0.5, 42, true);
        let kept_fraction = mask.kept.data().iter().sum::<f64>() / n as f64;
        assert!((kept_fraction - 0.5).abs() < 0.02, "kept {kept_fraction}");
        let mean = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        // Determinism per seed.
        let (y2, _) = dropout(&x, 0.5, 42, true);
        assert_eq!(y, y2);
    }
}
