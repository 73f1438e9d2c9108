//! End-to-end experiments: pretraining, per-method fine-tuning with
//! pseudo-labeling, multi-seed aggregation and report files.

mod config;
mod report;
mod run;

pub use config::{ExperimentConfig, Method};
pub use report::{
    aggregate_seeds, emit_reports, Aggregates, DatasetSummary, ExperimentReport, MeanStd,
    CROSSINGS_FILE, EPOCHS_FILE, SCORES_FILE, SUMMARY_FILE,
};
pub use run::{
    run_all, run_experiment, CrossingRecord, EpochRecord, FinalMetrics, SeedReport,
};
