use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled (AdamW-style) decay coefficient.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-6,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(self, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..self
        }
    }
}

/// Moment accumulators for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    config: AdamConfig,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &Mlp<T>, config: AdamConfig) -> Self {
        let zeros: Vec<_> = params
            .layers()
            .iter()
            .map(|l| Matrix::zeros(l.rows(), l.cols()))
            .collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn first_moment(&self) -> &[Matrix<T>] {
        &self.m
    }

    pub fn second_moment(&self) -> &[Matrix<T>] {
        &self.v
    }
}

/// One bias-corrected Adam update with decoupled weight decay.
///
/// Nothing is modified when a gradient entry is non-finite.
pub fn adam_step<T: Scalar>(
    params: &mut Mlp<T>,
    grads: &[Matrix<T>],
    state: &mut AdamState<T>,
) -> Result<()> {
    if grads.len() != params.num_layers() || state.m.len() != params.num_layers() {
        return Err(Error::shape(
            format!("{} gradient tensors", params.num_layers()),
            grads.len(),
        ));
    }
    for (k, (g, w)) in grads.iter().zip(params.layers()).enumerate() {
        if g.shape() != w.shape() || state.m[k].shape() != w.shape() {
            return Err(Error::shape(
                format!("layer {k} gradient {:?}", w.shape()),
                format!("{:?}", g.shape()),
            ));
        }
        if !g.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient in layer {k} at step {}",
                state.step + 1
            )));
        }
    }

    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let one = T::one();
    let bias1 = one - T::of(c.beta1.powi(t));
    let bias2 = one - T::of(c.beta2.powi(t));
    let lr = T::of(c.learning_rate);
    let decay = T::of(c.learning_rate * c.weight_decay);
    let eps = T::of(c.eps);

    for (k, w) in params.layers_mut().iter_mut().enumerate() {
        let g = grads[k].as_slice();
        let m = state.m[k].as_mut_slice();
        let v = state.v[k].as_mut_slice();
        for (i, wi) in w.as_mut_slice().iter_mut().enumerate() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            *wi -= decay * *wi;
            *wi -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
