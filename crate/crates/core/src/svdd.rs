//! Deep SVDD objectives: hypersphere center, anomaly scores, one-class and
//! soft-boundary training epochs, and the quantile radius update.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{adam_step, AdamState, Gradients, Mlp};
use crate::scalar::Scalar;

/// Center coordinates closer to zero than this are pushed out to `±0.1`.
pub const CENTER_MIN_ABS: f64 = 0.1;

/// Soft-boundary epochs trained with the one-class loss before the radius is updated.
pub const SB_WARMUP_EPOCHS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypersphere<T> {
    pub center: Vec<T>,
    pub radius_sq: T,
    /// Outlier fraction for the soft-boundary objective; unused by one-class training.
    pub nu: Option<f64>,
}

impl<T: Scalar> Hypersphere<T> {
    pub fn one_class(center: Vec<T>) -> Self {
        Self {
            center,
            radius_sq: T::zero(),
            nu: None,
        }
    }

    pub fn soft_boundary(center: Vec<T>, nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(Self {
            center,
            radius_sq: T::zero(),
            nu: Some(nu),
        })
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("nu must lie in (0, 1), got {nu}")))
    }
}

/// Replaces near-zero coordinates by `sign(c_j) * 0.1`, with `sign(0) = +1`.
pub fn clamp_center<T: Scalar>(mut center: Vec<T>) -> Vec<T> {
    let eps = T::of(CENTER_MIN_ABS);
    for c in &mut center {
        if c.abs() < eps {
            *c = if *c < T::zero() { -eps } else { eps };
        }
    }
    center
}

/// Clamped mean of the given embeddings.
pub fn center_from_embeddings<T: Scalar>(embeddings: &Matrix<T>) -> Result<Vec<T>> {
    if embeddings.rows() == 0 {
        return Err(Error::InvalidInput("cannot compute a center from no samples".into()));
    }
    let mut mean = vec![T::zero(); embeddings.cols()];
    for row in embeddings.iter_rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = T::of_usize(embeddings.rows());
    for m in &mut mean {
        *m /= n;
    }
    Ok(clamp_center(mean))
}

/// Center from one forward pass of the whole dataset through the encoder.
pub fn init_center<T: Scalar>(encoder: &Mlp<T>, features: &Matrix<T>) -> Result<Vec<T>> {
    if features.rows() == 0 {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    center_from_embeddings(&encoder.embed(features)?)
}

fn check_center<T: Scalar>(center: &[T], dim: usize) -> Result<()> {
    if center.len() != dim {
        return Err(Error::shape(
            format!("center of dimension {dim}"),
            center.len(),
        ));
    }
    Ok(())
}

/// Squared distance of each embedding row to the center.
pub fn scores_from_embeddings<T: Scalar>(embeddings: &Matrix<T>, center: &[T]) -> Result<Vec<T>> {
    check_center(center, embeddings.cols())?;
    Ok(embeddings
        .iter_rows()
        .map(|row| row.iter().zip(center).map(|(&e, &c)| (e - c) * (e - c)).sum())
        .collect())
}

/// `s_i = ||phi(x_i) - c||^2` for every row, using the current weights.
pub fn anomaly_scores<T: Scalar>(encoder: &Mlp<T>, center: &[T], features: &Matrix<T>) -> Result<Vec<T>> {
    check_center(center, encoder.output_dim())?;
    scores_from_embeddings(&encoder.embed(features)?, center)
}

/// Soft-boundary loss of one sample: `nu * R^2 + max(0, s - R^2)`.
pub fn soft_boundary_sample_loss<T: Scalar>(score: T, radius_sq: T, nu: f64) -> T {
    T::of(nu) * radius_sq + (score - radius_sq).max(T::zero())
}

/// Batch-mean one-class loss and its weight gradients.
pub fn oc_batch_gradients<T: Scalar>(
    encoder: &Mlp<T>,
    center: &[T],
    batch: &Matrix<T>,
) -> Result<(T, Gradients<T>)> {
    batch_gradients(encoder, center, batch, |_| true, |s| s)
}

/// Batch-mean soft-boundary loss and its weight gradients; `R^2` is held constant.
pub fn sb_batch_gradients<T: Scalar>(
    encoder: &Mlp<T>,
    center: &[T],
    radius_sq: T,
    nu: f64,
    batch: &Matrix<T>,
) -> Result<(T, Gradients<T>)> {
    check_nu(nu)?;
    batch_gradients(
        encoder,
        center,
        batch,
        |s| s > radius_sq,
        |s| soft_boundary_sample_loss(s, radius_sq, nu),
    )
}

/// Shared path: per-sample loss from the score, gradient `2 (phi - c) / B`
/// wherever `active(score)` holds.
fn batch_gradients<T: Scalar>(
    encoder: &Mlp<T>,
    center: &[T],
    batch: &Matrix<T>,
    active: impl Fn(T) -> bool,
    sample_loss: impl Fn(T) -> T,
) -> Result<(T, Gradients<T>)> {
    if batch.rows() == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    check_center(center, encoder.output_dim())?;
    let trace = encoder.forward(batch)?;
    let emb = trace.embedding();
    let scale = T::of(2.0) / T::of_usize(batch.rows());
    let mut upstream = Matrix::zeros(emb.rows(), emb.cols());
    let mut loss = T::zero();
    for b in 0..emb.rows() {
        let row = emb.row(b);
        let score: T = row.iter().zip(center).map(|(&e, &c)| (e - c) * (e - c)).sum();
        loss += sample_loss(score);
        if active(score) {
            for ((g, &e), &c) in upstream.row_mut(b).iter_mut().zip(row).zip(center) {
                *g = scale * (e - c);
            }
        }
    }
    let grads = encoder.backward(&trace, &upstream)?;
    Ok((loss / T::of_usize(batch.rows()), grads))
}

fn run_epoch<T: Scalar>(
    features: &Matrix<T>,
    index_set: &[usize],
    batch_size: usize,
    seed: u64,
    mut step: impl FnMut(&Matrix<T>) -> Result<T>,
) -> Result<T> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    if index_set.is_empty() {
        return Err(Error::InvalidInput("training index set is empty".into()));
    }
    if let Some(&bad) = index_set.iter().find(|&&i| i >= features.rows()) {
        return Err(Error::InvalidInput(format!(
            "index {bad} out of range for {} samples",
            features.rows()
        )));
    }
    let mut order = index_set.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut total = T::zero();
    for chunk in order.chunks(batch_size) {
        let batch = features.select_rows(chunk);
        total += step(&batch)? * T::of_usize(chunk.len());
    }
    Ok(total / T::of_usize(order.len()))
}

/// One shuffled pass of one-class training over `index_set`.
///
/// Returns the sample-weighted mean of the per-batch losses.
pub fn oc_train_epoch<T: Scalar>(
    encoder: &mut Mlp<T>,
    adam: &mut AdamState<T>,
    center: &[T],
    features: &Matrix<T>,
    index_set: &[usize],
    batch_size: usize,
    seed: u64,
) -> Result<T> {
    run_epoch(features, index_set, batch_size, seed, |batch| {
        let (loss, grads) = oc_batch_gradients(encoder, center, batch)?;
        adam_step(encoder, &grads, adam)?;
        Ok(loss)
    })
}

/// One shuffled pass of soft-boundary training over the whole dataset.
///
/// Before warm-up completes this is exactly [`oc_train_epoch`] on all rows.
pub fn sb_train_epoch<T: Scalar>(
    encoder: &mut Mlp<T>,
    adam: &mut AdamState<T>,
    sphere: &Hypersphere<T>,
    features: &Matrix<T>,
    batch_size: usize,
    seed: u64,
    warmup_done: bool,
) -> Result<T> {
    let nu = sphere
        .nu
        .ok_or_else(|| Error::InvalidConfig("soft-boundary training needs nu".into()))?;
    check_nu(nu)?;
    let all: Vec<usize> = (0..features.rows()).collect();
    if !warmup_done {
        return oc_train_epoch(encoder, adam, &sphere.center, features, &all, batch_size, seed);
    }
    run_epoch(features, &all, batch_size, seed, |batch| {
        let (loss, grads) = sb_batch_gradients(encoder, &sphere.center, sphere.radius_sq, nu, batch)?;
        adam_step(encoder, &grads, adam)?;
        Ok(loss)
    })
}

/// `R^2` where `R` is the nearest-rank `(1 - nu)` quantile of the distances:
/// the `ceil((1 - nu) n)`-th smallest, 1-based.
pub fn update_radius<T: Scalar>(scores: &[T], nu: f64) -> Result<T> {
    check_nu(nu)?;
    if scores.is_empty() {
        return Err(Error::InvalidInput("cannot update the radius from no scores".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite anomaly score".into()));
    }
    let n = scores.len();
    // Small slack so that e.g. (1 - 0.2) * 10 lands on 8, not 9.
    let rank = (((1.0 - nu) * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    // sqrt is monotone, so the quantile of distances is the quantile of scores.
    Ok(sorted[rank - 1])
}
