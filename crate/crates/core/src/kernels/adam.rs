//! Adam with L2 weight decay folded into the gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

/// First/second moment estimates per parameter tensor, plus the step count.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<DenseMatrix>,
    second_moment: Vec<DenseMatrix>,
    step_count: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    /// Zero-initialized moments matching the given parameter shapes.
    pub fn new(params: &[&DenseMatrix], hyper: AdamHyper) -> Self {
        let zeros = |m: &&DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Self {
            first_moment: params.iter().map(zeros).collect(),
            second_moment: params.iter().map(zeros).collect(),
            step_count: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update, in place. Weight decay enters as an L2 term
/// (decay * param) added to the gradient before the moment updates.
pub fn adam_step(
    params: &mut [&mut DenseMatrix],
    grads: &[&DenseMatrix],
    state: &mut AdamState,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::DimensionMismatch(format!(
            "adam_step: {} params, {} grads, state for {}",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    let h = state.hyper;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - h.beta1.powi(t);
    let bias2 = 1.0 - h.beta2.powi(t);

    for ((param, grad), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(&mut state.second_moment))
    {
        if !param.same_shape(grad) || !param.same_shape(m) {
            return Err(Error::DimensionMismatch(format!(
                "adam_step: param {}x{} vs grad {}x{}",
                param.rows(),
                param.cols(),
                grad.rows(),
                grad.cols()
            )));
        }
        for ((p, &g0), (mi, vi)) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()))
        {
            let g = g0 + h.weight_decay * *p;
            *mi = h.beta1 * *mi + (1.0 - h.beta1) * g;
            *vi = h.beta2 * *vi + (1.0 - h.beta2) * g * g;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *p -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
    }
    Ok(())
}
