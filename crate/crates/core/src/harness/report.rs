use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::config::ExperimentConfig;
use super::run::SeedReport;

pub const SUMMARY_FILE: &str = "summary.json";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const CROSSINGS_FILE: &str = "crossings.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean and population standard deviation; `None` for no values.
pub fn aggregate_seeds(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(MeanStd {
        mean,
        std: var.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub rocauc: Option<MeanStd>,
    pub prauc: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub precision: Option<MeanStd>,
    pub recall: Option<MeanStd>,
}

impl Aggregates {
    /// A metric is aggregated only when every seed reports it.
    pub fn from_runs(runs: &[SeedReport]) -> Self {
        let over = |get: fn(&SeedReport) -> Option<f64>| -> Option<MeanStd> {
            let values: Option<Vec<f64>> = runs.iter().map(get).collect();
            values.and_then(|v| aggregate_seeds(&v))
        };
        Self {
            rocauc: over(|r| r.final_metrics.rocauc),
            prauc: over(|r| r.final_metrics.prauc),
            f1: over(|r| r.final_metrics.f1),
            precision: over(|r| r.final_metrics.precision),
            recall: over(|r| r.final_metrics.recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n: usize,
    pub dim: usize,
    pub anomalies: usize,
    pub anomaly_ratio: f64,
    pub architecture: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub runs: Vec<SeedReport>,
    pub aggregate: Aggregates,
}

impl ExperimentReport {
    pub fn new<T: Scalar>(config: ExperimentConfig, dataset: &Dataset<T>, runs: Vec<SeedReport>) -> Self {
        let summary = DatasetSummary {
            name: dataset.name.clone(),
            n: dataset.len(),
            dim: dataset.dim(),
            anomalies: dataset.anomaly_count(),
            anomaly_ratio: dataset.anomaly_ratio(),
            architecture: config.architecture(dataset),
        };
        let aggregate = Aggregates::from_runs(&runs);
        Self {
            config,
            dataset: summary,
            runs,
            aggregate,
        }
    }
}

#[derive(Serialize)]
struct SeedSummary<'a> {
    seed: u64,
    #[serde(flatten)]
    metrics: &'a super::run::FinalMetrics,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    dataset: &'a DatasetSummary,
    aggregate: &'a Aggregates,
    seeds: Vec<SeedSummary<'a>>,
}

fn cell<V: ToString>(v: Option<V>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `summary.json`, `epochs.csv`, `scores.csv` and `crossings.csv` into `out_dir`.
pub fn emit_reports(report: &ExperimentReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let summary = Summary {
        config: &report.config,
        dataset: &report.dataset,
        aggregate: &report.aggregate,
        seeds: report
            .runs
            .iter()
            .map(|r| SeedSummary {
                seed: r.seed,
                metrics: &r.final_metrics,
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Serialize {
        path: out_dir.join(SUMMARY_FILE),
        message: e.to_string(),
    })?;
    json.push('\n');
    write_file(out_dir, SUMMARY_FILE, &json)?;

    let mut epochs =
        String::from("seed,epoch,rocauc,prauc,f1,delta_star,delta_bar,pseudo_normal_count,loss\n");
    for run in &report.runs {
        for r in &run.epochs {
            let _ = writeln!(
                epochs,
                "{},{},{},{},{},{},{},{},{}",
                run.seed,
                r.epoch,
                cell(r.rocauc),
                cell(r.prauc),
                cell(r.f1),
                cell(r.delta_star),
                cell(r.delta_bar),
                r.pseudo_normal_count,
                r.loss
            );
        }
    }
    write_file(out_dir, EPOCHS_FILE, &epochs)?;

    let mut scores = String::from("seed,index,score,rank,prediction,label\n");
    for run in &report.runs {
        for (i, (&s, &rank)) in run.scores.iter().zip(&run.ranks).enumerate() {
            let pred = run.predictions.as_ref().map(|p| u8::from(p[i]));
            let _ = writeln!(
                scores,
                "{},{},{},{},{},{}",
                run.seed,
                i,
                s,
                rank,
                cell(pred),
                u8::from(run.labels[i])
            );
        }
    }
    write_file(out_dir, SCORES_FILE, &scores)?;

    let mut crossings = String::from("seed,epoch,delta,scaled_objective\n");
    for run in &report.runs {
        for c in &run.crossings {
            let _ = writeln!(
                crossings,
                "{},{},{},{}",
                run.seed, c.epoch, c.delta, c.scaled_objective
            );
        }
    }
    write_file(out_dir, CROSSINGS_FILE, &crossings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_seeds(&[70.0, 80.0]), Some(MeanStd { mean: 75.0, std: 5.0 }));
        assert_eq!(aggregate_seeds(&[0.8]), Some(MeanStd { mean: 0.8, std: 0.0 }));
        assert_eq!(aggregate_seeds(&[0.3; 4]).unwrap().std, 0.0);
        assert_eq!(aggregate_seeds(&[]), None);
    }
}
