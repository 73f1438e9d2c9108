use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One-class loss on every sample, every epoch.
    Oc,
    /// Soft-boundary loss with quantile radius.
    Sb,
    /// One-class loss on samples below a per-epoch Otsu threshold.
    OcOtsu,
    /// One-class loss on samples outside the top true-anomaly-ratio fraction.
    OcTar,
    /// One-class loss on the rank-dynamics pseudo-normal set.
    Proposed,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Oc,
        Method::Sb,
        Method::OcOtsu,
        Method::OcTar,
        Method::Proposed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Oc => "oc",
            Method::Sb => "sb",
            Method::OcOtsu => "oc-otsu",
            Method::OcTar => "oc-tar",
            Method::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method `{s}`; expected one of oc, sb, oc-otsu, oc-tar, proposed"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: Method,
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seeds: Vec<u64>,
    /// Hidden widths; the dataset default is used when absent.
    pub hidden: Option<Vec<usize>>,
    /// Soft-boundary outlier fraction; defaults to the dataset's anomaly ratio.
    pub nu: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Proposed,
            epochs: 50,
            pretrain_epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            seeds: vec![0],
            hidden: None,
            nu: None,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    pub fn with_seeds(self, seeds: Vec<u64>) -> Self {
        Self { seeds, ..self }
    }

    /// Encoder widths including the input layer.
    pub fn architecture<T: Scalar>(&self, dataset: &Dataset<T>) -> Vec<usize> {
        match &self.hidden {
            Some(h) => std::iter::once(dataset.dim()).chain(h.iter().copied()).collect(),
            None => dataset.default_architecture(),
        }
    }

    /// `nu` for soft-boundary training: explicit override or the true anomaly ratio.
    pub fn effective_nu<T: Scalar>(&self, dataset: &Dataset<T>) -> f64 {
        self.nu.unwrap_or_else(|| dataset.anomaly_ratio())
    }

    /// Rejects every configuration/dataset combination that cannot run.
    pub fn validate<T: Scalar>(&self, dataset: &Dataset<T>) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.method == Method::Proposed && self.epochs < 3 {
            return bad(format!(
                "method proposed needs at least 3 epochs, got {}",
                self.epochs
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if let Some(h) = &self.hidden {
            if h.is_empty() || h.contains(&0) {
                return bad(format!("hidden widths must be non-empty and positive, got {h:?}"));
            }
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu < 1.0) {
                return bad(format!("nu must lie in (0, 1), got {nu}"));
            }
        }
        if dataset.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        let n = dataset.len();
        match self.method {
            Method::Proposed if n < 3 => {
                bad(format!("method proposed needs at least 3 samples, got {n}"))
            }
            Method::OcOtsu if n < 2 => bad(format!("method oc-otsu needs at least 2 samples, got {n}")),
            Method::Sb => {
                let nu = self.effective_nu(dataset);
                if nu > 0.0 && nu < 1.0 {
                    Ok(())
                } else {
                    bad(format!(
                        "method sb needs nu in (0, 1); the dataset anomaly ratio is {nu}, pass --nu"
                    ))
                }
            }
            Method::OcTar => {
                let r = dataset.anomaly_ratio();
                if r > 0.0 && r < 1.0 {
                    Ok(())
                } else {
                    bad(format!("method oc-tar needs an anomaly ratio in (0, 1), got {r}"))
                }
            }
            _ => Ok(()),
        }
    }
}
