//! Unsupervised deep one-class classification with adaptive pseudo-labeling.
//!
//! An encoder is pretrained as an autoencoder, then fine-tuned to pull
//! embeddings toward a fixed hypersphere center. After every epoch each
//! sample's anomaly score is ranked; the threshold where rank crossings
//! between adjacent epochs are rarest (relative to the area they could
//! occupy) decides which samples are trusted as normal for the next epoch.
//!
//! The numeric modules are generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below fix the precision used by the harness and CLI.

pub mod baselines;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod scalar;
pub mod seed;
pub mod svdd;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Mlp64 = nn::Mlp<f64>;
pub type Mlp32 = nn::Mlp<f32>;
pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type Hypersphere64 = svdd::Hypersphere<f64>;
pub type ScoreThreshold64 = baselines::ScoreThreshold<f64>;
