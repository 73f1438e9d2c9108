//! Tabular datasets: CSV input/output, standardization, synthetic data and
//! per-dataset encoder architectures.
//!
//! CSV layout: UTF-8, comma separated, one header row, feature columns first
//! and a final `label` column holding `0` (normal) or `1` (anomaly).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::seed::{stream_rng, Stage};

pub const LABEL_COLUMN: &str = "label";

/// Features plus labels that are only ever used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Matrix<T>,
    pub labels: Vec<bool>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(name: impl Into<String>, features: Matrix<T>, labels: Vec<bool>) -> Result<Self> {
        let feature_names = (1..=features.cols()).map(|j| format!("x{j}")).collect();
        Self::with_feature_names(name, feature_names, features, labels)
    }

    pub fn with_feature_names(
        name: impl Into<String>,
        feature_names: Vec<String>,
        features: Matrix<T>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::InvalidInput(format!(
                "a dataset needs at least one row and one feature, got {}x{}",
                features.rows(),
                features.cols()
            )));
        }
        if labels.len() != features.rows() {
            return Err(Error::shape(format!("{} labels", features.rows()), labels.len()));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::shape(
                format!("{} feature names", features.cols()),
                feature_names.len(),
            ));
        }
        Ok(Self {
            name: name.into(),
            feature_names,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn anomaly_ratio(&self) -> f64 {
        self.anomaly_count() as f64 / self.len() as f64
    }

    pub fn default_architecture(&self) -> Vec<usize> {
        default_architecture(&self.name, self.dim())
    }
}

/// Reads a labelled CSV file; the dataset is named after the lower-cased file stem.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    read_csv(file, name)
}

/// Parses CSV content from any reader. Row numbers in errors are file line
/// numbers (header = row 1); columns are 1-based.
pub fn read_csv<T: Scalar, R: std::io::Read>(reader: R, name: impl Into<String>) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "empty file: missing header row".into(),
        });
    }
    let last = header.len() - 1;
    if header[last].trim() != LABEL_COLUMN {
        return Err(Error::Parse {
            row: 1,
            column: header.len(),
            message: format!("final column must be named `{LABEL_COLUMN}`, found `{}`", &header[last]),
        });
    }
    if last == 0 {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "no feature columns before `label`".into(),
        });
    }
    let feature_names: Vec<String> = header.iter().take(last).map(|h| h.trim().to_string()).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_error(e, row))?;
        for (j, cell) in record.iter().take(last).enumerate() {
            let v: T = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
        labels.push(match record[last].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    row,
                    column: last + 1,
                    message: format!("label must be 0 or 1, found `{other}`"),
                })
            }
        });
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            row: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }
    let features = Matrix::from_vec(labels.len(), last, values)?;
    Dataset::with_feature_names(name, feature_names, features, labels)
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    let row = e.position().map_or(row, |p| p.line() as usize);
    Error::Parse {
        row,
        column: 0,
        message: e.to_string(),
    }
}

/// Writes the dataset in the layout accepted by [`load_csv`].
pub fn write_csv<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for name in &dataset.feature_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(LABEL_COLUMN);
    out.push('\n');
    for (row, &label) in dataset.features.iter_rows().zip(&dataset.labels) {
        for v in row {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push(if label { '1' } else { '0' });
        out.push('\n');
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Per-column zero mean and unit population variance. Constant columns are
/// only centered.
pub fn standardize_features<T: Scalar>(features: &Matrix<T>) -> Matrix<T> {
    let (n, d) = features.shape();
    let mut out = features.clone();
    if n == 0 {
        return out;
    }
    let count = T::of_usize(n);
    for j in 0..d {
        let first = features.get(0, j);
        if (0..n).all(|i| features.get(i, j) == first) {
            for i in 0..n {
                out.set(i, j, T::zero());
            }
            continue;
        }
        let mean = (0..n).map(|i| features.get(i, j)).sum::<T>() / count;
        let var = (0..n)
            .map(|i| {
                let c = features.get(i, j) - mean;
                c * c
            })
            .sum::<T>()
            / count;
        let std = var.sqrt();
        let divisor = if std > T::zero() { std } else { T::one() };
        for i in 0..n {
            out.set(i, j, (features.get(i, j) - mean) / divisor);
        }
    }
    out
}

pub fn standardize<T: Scalar>(dataset: &Dataset<T>) -> Dataset<T> {
    Dataset {
        features: standardize_features(&dataset.features),
        ..dataset.clone()
    }
}

/// `round(ratio * n)` anomalies uniform on `[-6, 6]^d` mixed with standard
/// normal inliers, rows shuffled.
pub fn generate_synthetic<T: Scalar>(n: usize, d: usize, anomaly_ratio: f64, seed: u64) -> Result<Dataset<T>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig(format!(
            "synthetic data needs n >= 1 and d >= 1, got n={n}, d={d}"
        )));
    }
    if !(anomaly_ratio > 0.0 && anomaly_ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "anomaly ratio must lie in (0, 1), got {anomaly_ratio}"
        )));
    }
    if anomaly_ratio * (n as f64) < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "n * ratio must be at least 1, got {}",
            anomaly_ratio * n as f64
        )));
    }
    let k = ((anomaly_ratio * n as f64 + 0.5).floor() as usize).min(n);
    let mut rng = stream_rng(seed, Stage::Synthesis, 0);
    let uniform = Uniform::new_inclusive(-6.0f64, 6.0);
    let mut rows: Vec<(Vec<T>, bool)> = Vec::with_capacity(n);
    for _ in 0..n - k {
        let x = (0..d)
            .map(|_| T::of(StandardNormal.sample(&mut rng)))
            .collect();
        rows.push((x, false));
    }
    for _ in 0..k {
        let x = (0..d).map(|_| T::of(uniform.sample(&mut rng))).collect();
        rows.push((x, true));
    }
    rows.shuffle(&mut rng);
    let labels = rows.iter().map(|(_, l)| *l).collect();
    let data = rows.into_iter().flat_map(|(x, _)| x).collect();
    Dataset::new("synthetic", Matrix::from_vec(n, d, data)?, labels)
}

/// Encoder widths `[d, h1, h2, h3]` by dataset name, falling back on input width.
pub fn default_architecture(name: &str, dim: usize) -> Vec<usize> {
    let name = name.to_ascii_lowercase();
    let hidden: [usize; 3] = if name == "arrhythmia" || dim >= 200 {
        [128, 64, 32]
    } else if name == "mnist" || (64..200).contains(&dim) {
        [64, 32, 16]
    } else if name == "pima" || name == "thyroid" {
        [32, 16, 4]
    } else {
        [32, 16, 8]
    };
    std::iter::once(dim).chain(hidden).collect()
}
