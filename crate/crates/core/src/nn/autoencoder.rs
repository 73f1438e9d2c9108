//! Encoder/decoder pair used to pretrain the one-class encoder.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{adam_step, AdamConfig, AdamState, Gradients, Mlp};

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<T> {
    pub encoder: Mlp<T>,
    pub decoder: Mlp<T>,
}

impl<T: Scalar> Autoencoder<T> {
    /// Decoder dims are the encoder dims reversed.
    pub fn init(encoder_dims: &[usize], encoder_seed: u64, decoder_seed: u64) -> Result<Self> {
        let encoder = Mlp::init(encoder_dims, encoder_seed)?;
        let decoder_dims: Vec<usize> = encoder_dims.iter().rev().copied().collect();
        let decoder = Mlp::init(&decoder_dims, decoder_seed)?;
        Self::new(encoder, decoder)
    }

    pub fn new(encoder: Mlp<T>, decoder: Mlp<T>) -> Result<Self> {
        let mirrored: Vec<usize> = encoder.dims().into_iter().rev().collect();
        if decoder.dims() != mirrored {
            return Err(Error::shape(
                format!("decoder dims {mirrored:?}"),
                format!("{:?}", decoder.dims()),
            ));
        }
        Ok(Self { encoder, decoder })
    }

    pub fn reconstruct(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.decoder.embed(&self.encoder.embed(batch)?)
    }

    /// Mean over samples of the squared L2 reconstruction error.
    pub fn reconstruction_loss(&self, batch: &Matrix<T>) -> Result<T> {
        let out = self.reconstruct(batch)?;
        Ok(mean_squared_rows(&out, batch))
    }
}

fn mean_squared_rows<T: Scalar>(out: &Matrix<T>, target: &Matrix<T>) -> T {
    if target.rows() == 0 {
        return T::zero();
    }
    let total: T = out
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&o, &x)| (o - x) * (o - x))
        .sum();
    total / T::of_usize(target.rows())
}

#[derive(Debug, Clone)]
pub struct AutoencoderOptimizer<T> {
    pub encoder: AdamState<T>,
    pub decoder: AdamState<T>,
}

impl<T: Scalar> AutoencoderOptimizer<T> {
    pub fn new(ae: &Autoencoder<T>, config: AdamConfig) -> Self {
        Self {
            encoder: AdamState::new(&ae.encoder, config),
            decoder: AdamState::new(&ae.decoder, config),
        }
    }
}

/// Loss and weight gradients `(loss, encoder grads, decoder grads)` for one batch.
pub fn reconstruction_gradients<T: Scalar>(
    ae: &Autoencoder<T>,
    batch: &Matrix<T>,
) -> Result<(T, Gradients<T>, Gradients<T>)> {
    if batch.rows() == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let enc = ae.encoder.forward(batch)?;
    let dec = ae.decoder.forward(enc.embedding())?;
    let out = dec.embedding();
    let loss = mean_squared_rows(out, batch);
    let scale = T::of(2.0) / T::of_usize(batch.rows());
    let mut upstream = Matrix::zeros(out.rows(), out.cols());
    for ((g, &o), &x) in upstream
        .as_mut_slice()
        .iter_mut()
        .zip(out.as_slice())
        .zip(batch.as_slice())
    {
        *g = scale * (o - x);
    }
    let (dec_grads, code_grad) = ae.decoder.backward_with_input_grad(&dec, &upstream)?;
    let enc_grads = ae.encoder.backward(&enc, &code_grad)?;
    Ok((loss, enc_grads, dec_grads))
}

/// One Adam step on encoder and decoder; returns the batch loss before the update.
pub fn autoencoder_step<T: Scalar>(
    ae: &mut Autoencoder<T>,
    batch: &Matrix<T>,
    opt: &mut AutoencoderOptimizer<T>,
) -> Result<T> {
    let (loss, enc_grads, dec_grads) = reconstruction_gradients(ae, batch)?;
    adam_step(&mut ae.encoder, &enc_grads, &mut opt.encoder)?;
    adam_step(&mut ae.decoder, &dec_grads, &mut opt.decoder)?;
    Ok(loss)
}

/// One shuffled pass over all rows; returns the sample-weighted mean batch loss.
pub fn pretrain_epoch<T: Scalar, R: Rng + ?Sized>(
    ae: &mut Autoencoder<T>,
    opt: &mut AutoencoderOptimizer<T>,
    features: &Matrix<T>,
    batch_size: usize,
    rng: &mut R,
) -> Result<T> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    if features.rows() == 0 {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let mut order: Vec<usize> = (0..features.rows()).collect();
    order.shuffle(rng);
    let mut total = T::zero();
    for chunk in order.chunks(batch_size) {
        let batch = features.select_rows(chunk);
        total += autoencoder_step(ae, &batch, opt)? * T::of_usize(chunk.len());
    }
    Ok(total / T::of_usize(features.rows()))
}
