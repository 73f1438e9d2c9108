use serde::{Deserialize, Serialize};

use crate::baselines::{otsu_threshold, tar_threshold, top_k_predictions, ScoreThreshold};
use crate::data::{standardize, Dataset};
use crate::dynamics::{
    crossing_counts, pseudo_normal_set, rank_scores, select_threshold_near, update_running_threshold,
    DynamicsPair, PseudoNormalSet, RankVector, ThresholdState,
};
use crate::error::{Error, Result};
use crate::metrics::{classify_and_report, pr_auc, roc_auc, ClassificationReport};
use crate::nn::{pretrain_epoch, AdamConfig, AdamState, Autoencoder, AutoencoderOptimizer};
use crate::scalar::Scalar;
use crate::seed::{stream_rng, stream_seed, Stage};
use crate::svdd::{
    anomaly_scores, init_center, oc_train_epoch, sb_train_epoch, update_radius, Hypersphere,
    SB_WARMUP_EPOCHS,
};

use super::config::{ExperimentConfig, Method};

/// Number of leading epochs trained on the full dataset by the pseudo-labeling methods.
const FULL_DATA_EPOCHS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub rocauc: Option<f64>,
    pub prauc: Option<f64>,
    pub f1: Option<f64>,
    pub delta_star: Option<usize>,
    pub delta_bar: Option<f64>,
    /// Size of the set trained on during this epoch.
    pub pseudo_normal_count: usize,
    pub loss: f64,
}

/// Scaled objective of one candidate threshold at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub epoch: usize,
    pub delta: usize,
    pub scaled_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub rocauc: Option<f64>,
    pub prauc: Option<f64>,
    pub f1: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub predicted_anomalies: Option<usize>,
    /// Running-mean rank threshold (proposed).
    pub delta_bar: Option<f64>,
    /// Score cutoff (sb: `R^2`; oc-otsu and oc-tar: selected threshold).
    pub score_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub method: Method,
    pub final_metrics: FinalMetrics,
    pub epochs: Vec<EpochRecord>,
    pub crossings: Vec<CrossingRecord>,
    pub scores: Vec<f64>,
    pub ranks: Vec<usize>,
    pub predictions: Option<Vec<bool>>,
    pub labels: Vec<bool>,
}

/// Ranking metrics, or `None` when the labels hold a single class.
fn ranking_metrics<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<(Option<f64>, Option<f64>)> {
    let roc = match roc_auc(scores, labels) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    let pr = match pr_auc(scores, labels) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok((roc, pr))
}

/// Which rows the next epoch trains on.
enum TrainingSet {
    Full,
    Subset(Vec<usize>),
}

impl TrainingSet {
    fn from_selection(selected: Vec<usize>) -> Self {
        if selected.is_empty() {
            TrainingSet::Full
        } else {
            TrainingSet::Subset(selected)
        }
    }
}

/// Per-method state carried between epochs.
struct MethodState<T> {
    thresholds: ThresholdState,
    sphere: Hypersphere<T>,
    radius_ready: bool,
    score_threshold: Option<ScoreThreshold<T>>,
    next: TrainingSet,
}

/// Runs one seed of the configured method on `dataset` (standardized here).
pub fn run_experiment<T: Scalar>(
    config: &ExperimentConfig,
    dataset: &Dataset<T>,
    seed: u64,
) -> Result<SeedReport> {
    config.validate(dataset)?;
    let data = standardize(dataset);
    let features = &data.features;
    let labels = &data.labels;
    let n = data.len();
    let all: Vec<usize> = (0..n).collect();
    let adam_cfg = AdamConfig::default().with_learning_rate(config.learning_rate);

    let dims = config.architecture(&data);
    let mut ae = Autoencoder::<T>::init(
        &dims,
        stream_seed(seed, Stage::EncoderInit, 0),
        stream_seed(seed, Stage::DecoderInit, 0),
    )?;
    let mut ae_opt = AutoencoderOptimizer::new(&ae, adam_cfg);
    for epoch in 1..=config.pretrain_epochs {
        let mut rng = stream_rng(seed, Stage::PretrainShuffle, epoch as u64);
        pretrain_epoch(&mut ae, &mut ae_opt, features, config.batch_size, &mut rng)?;
    }
    let mut encoder = ae.encoder;
    let mut adam = AdamState::new(&encoder, adam_cfg);
    let center = init_center(&encoder, features)?;

    let method = config.method;
    let mut state = MethodState {
        thresholds: ThresholdState::new(),
        sphere: match method {
            Method::Sb => Hypersphere::soft_boundary(center, config.effective_nu(&data))?,
            _ => Hypersphere::one_class(center),
        },
        radius_ready: false,
        score_threshold: None,
        next: TrainingSet::Full,
    };
    let tar_ratio = data.anomaly_ratio();

    let mut epochs = Vec::with_capacity(config.epochs);
    let mut crossings = Vec::new();
    let mut prev_ranks: Option<RankVector> = None;
    let mut scores = Vec::new();
    let mut ranks = RankVector::new(Vec::new())?;

    for e in 1..=config.epochs {
        let shuffle_seed = stream_seed(seed, Stage::TrainShuffle, e as u64);
        let train_set = if e <= FULL_DATA_EPOCHS {
            &all
        } else {
            match &state.next {
                TrainingSet::Full => &all,
                TrainingSet::Subset(s) => s,
            }
        };
        let trained_on = train_set.len();
        let loss = match method {
            Method::Sb => sb_train_epoch(
                &mut encoder,
                &mut adam,
                &state.sphere,
                features,
                config.batch_size,
                shuffle_seed,
                e > SB_WARMUP_EPOCHS,
            )?,
            _ => oc_train_epoch(
                &mut encoder,
                &mut adam,
                &state.sphere.center,
                features,
                train_set,
                config.batch_size,
                shuffle_seed,
            )?,
        };
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite training loss at epoch {e}")));
        }

        scores = anomaly_scores(&encoder, &state.sphere.center, features)?;
        ranks = rank_scores(&scores)?;
        let (rocauc, prauc) = ranking_metrics(&scores, labels)?;

        let mut record = EpochRecord {
            epoch: e,
            rocauc,
            prauc,
            f1: None,
            delta_star: None,
            delta_bar: None,
            pseudo_normal_count: trained_on,
            loss: loss.to_f64_lossy(),
        };

        let pair = match prev_ranks.take() {
            Some(prev) if n >= 3 => Some(DynamicsPair::new(prev, ranks.clone())?),
            _ => None,
        };
        if let Some(pair) = &pair {
            let counts = crossing_counts(pair)?;
            crossings.extend(counts.deltas().map(|delta| CrossingRecord {
                epoch: e,
                delta,
                scaled_objective: counts.scaled(delta),
            }));
            if method == Method::Proposed {
                let delta_star = select_threshold_near(&counts, state.thresholds.running_mean());
                let delta_bar = update_running_threshold(&mut state.thresholds, delta_star);
                let selected = match pseudo_normal_set(pair, delta_bar) {
                    PseudoNormalSet::Subset(v) => v,
                    PseudoNormalSet::Empty => Vec::new(),
                };
                state.thresholds.set_pseudo_normal(selected.clone());
                state.next = TrainingSet::from_selection(selected);
                record.delta_star = Some(delta_star);
                record.delta_bar = Some(delta_bar);
            }
        }

        match method {
            Method::Sb if e >= SB_WARMUP_EPOCHS => {
                state.sphere.radius_sq = update_radius(&scores, config.effective_nu(&data))?;
                state.radius_ready = true;
            }
            Method::OcOtsu => {
                let t = otsu_threshold(&scores)?;
                state.next = TrainingSet::from_selection(t.below(&scores));
                state.score_threshold = Some(t);
            }
            Method::OcTar => {
                let t = tar_threshold(&scores, tar_ratio)?;
                let flagged = top_k_predictions(&scores, t.split_rank)?;
                let kept = (0..n).filter(|&i| !flagged[i]).collect();
                state.next = TrainingSet::from_selection(kept);
                state.score_threshold = Some(t);
            }
            _ => {}
        }

        if let Some(pred) = predictions(method, &state, &scores, &ranks, tar_ratio)? {
            record.f1 = Some(classify_and_report(&pred, labels)?.f1);
        }
        epochs.push(record);
        prev_ranks = Some(ranks.clone());
    }

    let (rocauc, prauc) = ranking_metrics(&scores, labels)?;
    let preds = predictions(method, &state, &scores, &ranks, tar_ratio)?;
    let report: Option<ClassificationReport> = preds
        .as_ref()
        .map(|p| classify_and_report(p, labels))
        .transpose()?;
    let score_threshold = match method {
        Method::Sb => Some(state.sphere.radius_sq.to_f64_lossy()),
        Method::OcOtsu | Method::OcTar => state.score_threshold.map(|t| t.value.to_f64_lossy()),
        _ => None,
    };
    let final_metrics = FinalMetrics {
        rocauc,
        prauc,
        f1: report.map(|r| r.f1),
        precision: report.map(|r| r.precision),
        recall: report.map(|r| r.recall),
        predicted_anomalies: preds.as_ref().map(|p| p.iter().filter(|&&v| v).count()),
        delta_bar: state.thresholds.running_mean(),
        score_threshold,
    };
    Ok(SeedReport {
        seed,
        method,
        final_metrics,
        epochs,
        crossings,
        scores: scores.iter().map(|s| s.to_f64_lossy()).collect(),
        ranks: ranks.as_slice().to_vec(),
        predictions: preds,
        labels: labels.clone(),
    })
}

/// Current anomaly predictions of a method, if it has a threshold yet.
fn predictions<T: Scalar>(
    method: Method,
    state: &MethodState<T>,
    scores: &[T],
    ranks: &RankVector,
    tar_ratio: f64,
) -> Result<Option<Vec<bool>>> {
    Ok(match method {
        Method::Oc => None,
        Method::Proposed => state.thresholds.running_mean().map(|bar| {
            ranks.as_slice().iter().map(|&r| (r as f64) >= bar).collect()
        }),
        Method::Sb if state.radius_ready => {
            let r2 = state.sphere.radius_sq;
            Some(scores.iter().map(|&s| s > r2).collect())
        }
        Method::Sb => None,
        Method::OcOtsu => state.score_threshold.map(|t| t.predict(scores)),
        Method::OcTar => match state.score_threshold {
            Some(_) => {
                let k = tar_threshold(scores, tar_ratio)?.split_rank;
                Some(top_k_predictions(scores, k)?)
            }
            None => None,
        },
    })
}

/// Runs every configured seed, in parallel where cores allow; results keep seed order.
pub fn run_all<T: Scalar>(config: &ExperimentConfig, dataset: &Dataset<T>) -> Result<Vec<SeedReport>> {
    config.validate(dataset)?;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(config.seeds.len());
    if workers <= 1 {
        return config
            .seeds
            .iter()
            .map(|&s| run_experiment(config, dataset, s))
            .collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<SeedReport>>> = (0..config.seeds.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= config.seeds.len() {
                    break;
                }
                let r = run_experiment(config, dataset, config.seeds[i]);
                results.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every seed ran")).collect()
}
