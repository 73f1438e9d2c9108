//! Competing threshold selectors on anomaly scores: Otsu's method and the
//! true-anomaly-ratio cutoff.

use serde::{Deserialize, Serialize};

use crate::dynamics::rank_scores;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Score cutoff; the `split_rank` highest-scoring samples lie above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreThreshold<T> {
    pub value: T,
    pub split_rank: usize,
}

impl<T: Scalar> ScoreThreshold<T> {
    /// `true` (anomalous) where `score >= value`.
    pub fn predict(&self, scores: &[T]) -> Vec<bool> {
        scores.iter().map(|&s| s >= self.value).collect()
    }

    /// Indices with `score < value`.
    pub fn below(&self, scores: &[T]) -> Vec<usize> {
        scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < self.value)
            .map(|(i, _)| i)
            .collect()
    }
}

fn sorted_finite<T: Scalar>(scores: &[T]) -> Result<Vec<T>> {
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("non-finite score at sample {i}")));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(sorted)
}

/// Running sums of squared deviations, `m2[t]` covering the first `t` values.
fn prefix_m2<T: Scalar>(values: impl Iterator<Item = T>, len: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(len + 1);
    out.push(T::zero());
    let (mut mean, mut m2) = (T::zero(), T::zero());
    for (k, x) in values.enumerate() {
        let count = T::of_usize(k + 1);
        let d = x - mean;
        mean += d / count;
        m2 += d * (x - mean);
        out.push(m2);
    }
    out
}

/// Exact Otsu split over the sorted scores.
///
/// For each split `t` (low group = `t` smallest) the weighted within-class
/// variance is `(M2_low + M2_high) / n`; the smallest minimizing `t` wins and
/// the threshold is the midpoint of the two boundary scores.
pub fn otsu_threshold<T: Scalar>(scores: &[T]) -> Result<ScoreThreshold<T>> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "Otsu's method needs at least 2 scores, got {n}"
        )));
    }
    let sorted = sorted_finite(scores)?;
    let low = prefix_m2(sorted.iter().copied(), n);
    let high = prefix_m2(sorted.iter().rev().copied(), n);
    let mut best_t = 1;
    let mut best = low[1] + high[n - 1];
    for t in 2..n {
        let objective = low[t] + high[n - t];
        if objective < best {
            best = objective;
            best_t = t;
        }
    }
    let half = T::of(0.5);
    Ok(ScoreThreshold {
        value: half * (sorted[best_t - 1] + sorted[best_t]),
        split_rank: n - best_t,
    })
}

/// `round_half_up(ratio * n)`.
pub fn tar_count(n: usize, anomaly_ratio: f64) -> Result<usize> {
    if !(anomaly_ratio > 0.0 && anomaly_ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "anomaly ratio must lie in (0, 1), got {anomaly_ratio}"
        )));
    }
    Ok(((anomaly_ratio * n as f64 + 0.5).floor() as usize).min(n))
}

/// Cutoff flagging the `round(ratio * n)` highest-scoring samples.
pub fn tar_threshold<T: Scalar>(scores: &[T], anomaly_ratio: f64) -> Result<ScoreThreshold<T>> {
    let n = scores.len();
    let k = tar_count(n, anomaly_ratio)?;
    let sorted = sorted_finite(scores)?;
    let value = if k == 0 {
        T::infinity()
    } else if k == n {
        T::neg_infinity()
    } else {
        T::of(0.5) * (sorted[n - k - 1] + sorted[n - k])
    };
    Ok(ScoreThreshold {
        value,
        split_rank: k,
    })
}

/// Marks exactly the `k` highest-ranked samples, ties ordered as in
/// [`rank_scores`].
pub fn top_k_predictions<T: Scalar>(scores: &[T], k: usize) -> Result<Vec<bool>> {
    let n = scores.len();
    let ranks = rank_scores(scores)?;
    Ok(ranks.as_slice().iter().map(|&r| r + k > n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn otsu_examples() {
        let t = otsu_threshold(&[0.0, 0.0, 0.0, 10.0, 10.0]).unwrap();
        assert_eq!(t.value, 5.0);
        assert_eq!(t.split_rank, 2);

        let t = otsu_threshold(&[2.0, 1.0]).unwrap();
        assert_eq!(t.value, 1.5);
        assert_eq!(t.split_rank, 1);

        let t = otsu_threshold(&[4.0; 6]).unwrap();
        assert_eq!(t.split_rank, 5);
        assert_eq!(t.value, 4.0);
    }

    #[test]
    fn otsu_rejects_tiny_input() {
        assert!(matches!(otsu_threshold(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(otsu_threshold(&[1.0, f64::INFINITY]), Err(Error::Numeric(_))));
    }

    #[test]
    fn otsu_prediction_rule() {
        let scores = [0.1, 5.0, 0.2, 4.0];
        let t = otsu_threshold(&scores).unwrap();
        assert_eq!(t.predict(&scores), vec![false, true, false, true]);
        assert_eq!(t.below(&scores), vec![0, 2]);
    }

    #[test]
    fn tar_examples() {
        let scores: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let t = tar_threshold(&scores, 0.2).unwrap();
        assert_eq!(t.split_rank, 2);
        assert_eq!(t.value, 7.5);
        assert_eq!(
            top_k_predictions(&scores, 2).unwrap(),
            [vec![false; 8], vec![true; 2]].concat()
        );

        assert_eq!(tar_count(768, 0.349).unwrap(), 268);

        let t = tar_threshold(&[1.0f64, 2.0, 3.0, 4.0, 5.0], 0.01).unwrap();
        assert_eq!(t.split_rank, 0);
        assert!(t.value.is_infinite() && t.value > 0.0);
        assert!(t.predict(&[1.0, 5.0]).iter().all(|&p| !p));
    }

    #[test]
    fn tar_rejects_bad_ratio() {
        for r in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(tar_threshold(&[1.0, 2.0], r), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        // Equal scores: later index ranks higher, so it is flagged first.
        assert_eq!(top_k_predictions(&[1.0, 1.0, 1.0], 1).unwrap(), vec![false, false, true]);
    }
}
