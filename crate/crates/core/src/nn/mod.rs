//! Bias-free dense network with leaky-rectifier hidden layers.
//!
//! Layer `k` holds a weight matrix of shape `(out_dim, in_dim)`. Hidden layers
//! apply `max(z, slope * z)`; the last layer is linear and its output is the
//! embedding. Gradients are computed analytically by [`Mlp::backward`] and
//! applied with [`AdamState`].

mod adam;
mod autoencoder;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use autoencoder::{
    autoencoder_step, pretrain_epoch, reconstruction_gradients, Autoencoder, AutoencoderOptimizer,
};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Negative-side slope of the hidden-layer leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.1;

/// One gradient matrix per layer, shaped like the layer's weights.
pub type Gradients<T> = Vec<Matrix<T>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    layers: Vec<Matrix<T>>,
    slope: T,
}

/// Per-layer pre-activations and activations of one batch.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    input: Matrix<T>,
    pre: Vec<Matrix<T>>,
    post: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn depth(&self) -> usize {
        self.post.len()
    }

    pub fn input(&self) -> &Matrix<T> {
        &self.input
    }

    pub fn pre_activation(&self, layer: usize) -> &Matrix<T> {
        &self.pre[layer]
    }

    pub fn activation(&self, layer: usize) -> &Matrix<T> {
        &self.post[layer]
    }

    pub fn embedding(&self) -> &Matrix<T> {
        self.post.last().expect("networks have at least one layer")
    }

    pub fn into_embedding(mut self) -> Matrix<T> {
        self.post.pop().expect("networks have at least one layer")
    }
}

impl<T: Scalar> Mlp<T> {
    /// Draws weights from `U(-sqrt(1/fan_in), sqrt(1/fan_in))`, deterministically per seed.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a network needs at least 2 layer dims, got {}",
                dims.len()
            )));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!(
                "layer dim at position {pos} must be positive"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (1.0 / fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                let data = (0..fan_in * fan_out)
                    .map(|_| T::of(dist.sample(&mut rng)))
                    .collect();
                Matrix::from_vec(fan_out, fan_in, data).expect("sized above")
            })
            .collect();
        Ok(Self {
            layers,
            slope: T::of(LEAKY_SLOPE),
        })
    }

    /// Wraps explicit weight matrices after checking that dimensions chain.
    pub fn from_layers(layers: Vec<Matrix<T>>, slope: T) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("a network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(Error::shape(
                    format!("layer {} in_dim {}", k + 1, pair[0].rows()),
                    pair[1].cols(),
                ));
            }
        }
        if layers.iter().any(|l| l.rows() == 0 || l.cols() == 0) {
            return Err(Error::InvalidConfig("layer dims must be positive".into()));
        }
        Ok(Self { layers, slope })
    }

    pub fn layers(&self) -> &[Matrix<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Matrix<T>] {
        &mut self.layers
    }

    pub fn slope(&self) -> T {
        self.slope
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    /// Layer widths from input to embedding.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Matrix::rows))
            .collect()
    }

    fn check_input(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::shape(
                format!("{} input columns", self.input_dim()),
                format!("{} columns", batch.cols()),
            ));
        }
        Ok(())
    }

    fn is_hidden(&self, layer: usize) -> bool {
        layer + 1 < self.layers.len()
    }

    pub fn forward(&self, batch: &Matrix<T>) -> Result<ForwardTrace<T>> {
        self.check_input(batch)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix<T>> = Vec::with_capacity(self.layers.len());
        for (k, w) in self.layers.iter().enumerate() {
            let input = post.last().unwrap_or(batch);
            let z = linear(input, w);
            let a = if self.is_hidden(k) {
                let slope = self.slope;
                z.map(|v| if v > T::zero() { v } else { slope * v })
            } else {
                z.clone()
            };
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardTrace {
            input: batch.clone(),
            pre,
            post,
        })
    }

    /// Embedding only, without keeping intermediate activations.
    pub fn embed(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(batch)?;
        let mut current: Option<Matrix<T>> = None;
        for (k, w) in self.layers.iter().enumerate() {
            let mut z = linear(current.as_ref().unwrap_or(batch), w);
            if self.is_hidden(k) {
                for v in z.as_mut_slice() {
                    if *v <= T::zero() {
                        *v *= self.slope;
                    }
                }
            }
            current = Some(z);
        }
        Ok(current.expect("at least one layer"))
    }

    /// Weight gradients of the scalar loss whose embedding gradient is given.
    ///
    /// `embedding_grad` must already carry the loss's batch normalization.
    pub fn backward(&self, trace: &ForwardTrace<T>, embedding_grad: &Matrix<T>) -> Result<Gradients<T>> {
        self.backward_with_input_grad(trace, embedding_grad)
            .map(|(grads, _)| grads)
    }

    /// As [`Mlp::backward`], also returning the gradient with respect to the input batch.
    pub fn backward_with_input_grad(
        &self,
        trace: &ForwardTrace<T>,
        embedding_grad: &Matrix<T>,
    ) -> Result<(Gradients<T>, Matrix<T>)> {
        if trace.depth() != self.layers.len() {
            return Err(Error::shape(
                format!("trace depth {}", self.layers.len()),
                trace.depth(),
            ));
        }
        if embedding_grad.shape() != trace.embedding().shape() {
            let (r, c) = trace.embedding().shape();
            let (gr, gc) = embedding_grad.shape();
            return Err(Error::shape(format!("{r}x{c}"), format!("{gr}x{gc}")));
        }
        let mut grads = vec![Matrix::zeros(0, 0); self.layers.len()];
        let mut upstream = embedding_grad.clone();
        for k in (0..self.layers.len()).rev() {
            if self.is_hidden(k) {
                let z = trace.pre[k].as_slice();
                for (g, &zv) in upstream.as_mut_slice().iter_mut().zip(z) {
                    if zv <= T::zero() {
                        *g *= self.slope;
                    }
                }
            }
            let w = &self.layers[k];
            let prev = if k == 0 { &trace.input } else { &trace.post[k - 1] };
            grads[k] = outer_accumulate(&upstream, prev);
            upstream = back_linear(&upstream, w);
        }
        Ok((grads, upstream))
    }
}

/// `out[b][j] = sum_k w[j][k] * x[b][k]`.
fn linear<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>) -> Matrix<T> {
    let (batch, out_dim) = (x.rows(), w.rows());
    let mut out = Matrix::zeros(batch, out_dim);
    for b in 0..batch {
        let xr = x.row(b);
        let or = out.row_mut(b);
        for (j, o) in or.iter_mut().enumerate() {
            let wr = w.row(j);
            let mut acc = T::zero();
            for (&wv, &xv) in wr.iter().zip(xr) {
                acc += wv * xv;
            }
            *o = acc;
        }
    }
    out
}

/// `grad[j][k] = sum_b delta[b][j] * x[b][k]`.
fn outer_accumulate<T: Scalar>(delta: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    let mut grad = Matrix::zeros(delta.cols(), x.cols());
    for b in 0..delta.rows() {
        let xr = x.row(b);
        for (j, &d) in delta.row(b).iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            for (g, &xv) in grad.row_mut(j).iter_mut().zip(xr) {
                *g += d * xv;
            }
        }
    }
    grad
}

/// `out[b][k] = sum_j delta[b][j] * w[j][k]`.
fn back_linear<T: Scalar>(delta: &Matrix<T>, w: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(delta.rows(), w.cols());
    for b in 0..delta.rows() {
        let dr = delta.row(b);
        let or = out.row_mut(b);
        for (j, &d) in dr.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            for (o, &wv) in or.iter_mut().zip(w.row(j)) {
                *o += d * wv;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn init_shapes_follow_dims() {
        let net = Mlp::<f64>::init(&[8, 32, 16, 8], 0).unwrap();
        let shapes: Vec<_> = net.layers().iter().map(Matrix::shape).collect();
        assert_eq!(shapes, vec![(32, 8), (16, 32), (8, 16)]);

        let net = Mlp::<f64>::init(&[274, 128, 64, 32], 0).unwrap();
        let shapes: Vec<_> = net.layers().iter().map(Matrix::shape).collect();
        assert_eq!(shapes, vec![(128, 274), (64, 128), (32, 64)]);
        assert_eq!(net.num_layers(), 3);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::<f64>::init(&[5, 4, 3], 11).unwrap();
        let b = Mlp::<f64>::init(&[5, 4, 3], 11).unwrap();
        assert_eq!(a, b);
        let c = Mlp::<f64>::init(&[5, 4, 3], 12).unwrap();
        assert_ne!(a, c);
        let limit = (1.0f64 / 5.0).sqrt();
        assert!(a.layers()[0].as_slice().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(Mlp::<f64>::init(&[], 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(Mlp::<f64>::init(&[3], 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(Mlp::<f64>::init(&[3, 0, 2], 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn zero_weights_give_zero_embedding() {
        let net = Mlp::from_layers(vec![Matrix::zeros(4, 3), Matrix::zeros(2, 4)], 0.1).unwrap();
        let x = m(&[vec![1.0, -2.0, 3.0], vec![0.5, 0.5, 0.5]]);
        assert!(net.embed(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer() {
        let net = Mlp::from_layers(vec![m(&[vec![1.0, -1.0]])], 0.1).unwrap();
        let trace = net.forward(&m(&[vec![3.0, 1.0]])).unwrap();
        assert_eq!(trace.embedding().as_slice(), &[2.0]);
    }

    #[test]
    fn leaky_hidden_activation() {
        // hidden pre-activations: [-2, 1]; output layer is identity.
        let net = Mlp::from_layers(
            vec![m(&[vec![-1.0, -1.0], vec![1.0, 0.0]]), m(&[vec![1.0, 0.0], vec![0.0, 1.0]])],
            0.1,
        )
        .unwrap();
        let trace = net.forward(&m(&[vec![1.0, 1.0]])).unwrap();
        assert_eq!(trace.pre_activation(0).as_slice(), &[-2.0, 1.0]);
        assert!((trace.activation(0).get(0, 0) + 0.2).abs() < 1e-15);
        assert_eq!(trace.activation(0).get(0, 1), 1.0);
        assert_eq!(trace.depth(), 2);
        let e = net.embed(&m(&[vec![1.0, 1.0]])).unwrap();
        assert_eq!(e.as_slice(), trace.embedding().as_slice());
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = Mlp::<f64>::init(&[3, 2], 0).unwrap();
        let x = Matrix::zeros(1, 4);
        assert!(matches!(net.forward(&x), Err(Error::Shape { .. })));
    }

    #[test]
    fn from_layers_checks_chaining() {
        let bad = Mlp::from_layers(vec![Matrix::<f64>::zeros(4, 3), Matrix::zeros(2, 5)], 0.1);
        assert!(matches!(bad, Err(Error::Shape { .. })));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let net = Mlp::<f64>::init(&[4, 6, 3], 3).unwrap();
        let x = Mlp::<f64>::init(&[4, 5], 9).unwrap().layers()[0].clone(); // 5x4 batch
        let trace = net.forward(&x).unwrap();
        let zero = Matrix::zeros(5, 3);
        let g0 = net.backward(&trace, &zero).unwrap();
        assert!(g0.iter().all(|g| g.as_slice().iter().all(|&v| v == 0.0)));

        let up = trace.embedding().map(|v| v.sin());
        let g1 = net.backward(&trace, &up).unwrap();
        let g2 = net.backward(&trace, &up.map(|v| 2.0 * v)).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            for (&u, &v) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((2.0 * u - v).abs() <= 1e-14 * (1.0 + v.abs()));
            }
        }
        assert!(net.backward(&trace, &Matrix::zeros(5, 2)).is_err());
    }

    #[test]
    fn scaling_output_layer_scales_embedding() {
        let mut net = Mlp::<f64>::init(&[3, 4, 2], 5).unwrap();
        let x = m(&[vec![0.3, -1.2, 2.0], vec![1.0, 1.0, -1.0]]);
        let before = net.embed(&x).unwrap();
        let last = net.num_layers() - 1;
        net.layers_mut()[last].scale(-2.5);
        let after = net.embed(&x).unwrap();
        for (&a, &b) in before.as_slice().iter().zip(after.as_slice()) {
            assert!((a * -2.5 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let net = Mlp::<f32>::init(&[3, 4, 2], 5).unwrap();
        let x = Matrix::<f32>::from_rows(&[vec![0.3, -1.2, 2.0]]).unwrap();
        let e64 = net.layers().iter().map(|l| l.cast::<f64>()).collect();
        let net64 = Mlp::from_layers(e64, 0.1).unwrap();
        let a = net.embed(&x).unwrap();
        let b = net64.embed(&x.cast()).unwrap();
        for (&u, &v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u as f64 - v).abs() < 1e-5);
        }
    }
}
