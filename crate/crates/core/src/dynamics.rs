//! Ranking-based training dynamics.
//!
//! Each epoch the anomaly scores are turned into ranks (1 = most normal). For
//! a candidate threshold `delta`, a sample is pseudo-normal when its rank is
//! below `delta`. Samples whose side changes between two adjacent epochs are
//! counted, the count is scaled by `1 / (delta * (n - delta))`, and the
//! minimizing `delta` becomes the epoch's threshold. The running mean of all
//! thresholds so far decides the next epoch's pseudo-normal training set.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 1-based ranks forming a permutation of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for (i, &r) in ranks.iter().enumerate() {
            if r == 0 || r > n || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::InvalidInput(format!(
                    "rank {r} at position {i} breaks the permutation of 1..={n}"
                )));
            }
        }
        Ok(Self(ranks))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, sample: usize) -> usize {
        self.0[sample]
    }
}

/// Ascending ranks; equal scores are ordered by sample index.
pub fn rank_scores<T: Scalar>(scores: &[T]) -> Result<RankVector> {
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("non-finite score at sample {i}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps index order among ties.
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite"));
    let mut ranks = vec![0; scores.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    Ok(RankVector(ranks))
}

/// Ranks of the same samples at epochs `e - 1` and `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsPair {
    prev: RankVector,
    cur: RankVector,
}

impl DynamicsPair {
    pub fn new(prev: RankVector, cur: RankVector) -> Result<Self> {
        if prev.len() != cur.len() {
            return Err(Error::shape(
                format!("{} ranks", prev.len()),
                format!("{} ranks", cur.len()),
            ));
        }
        Ok(Self { prev, cur })
    }

    pub fn prev(&self) -> &RankVector {
        &self.prev
    }

    pub fn cur(&self) -> &RankVector {
        &self.cur
    }

    pub fn len(&self) -> usize {
        self.cur.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cur.is_empty()
    }

    fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.prev.0.iter().copied().zip(self.cur.0.iter().copied())
    }
}

/// Sizes of the four transition sets for one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransitionCounts {
    pub normal_to_normal: usize,
    pub normal_to_anomalous: usize,
    pub anomalous_to_normal: usize,
    pub anomalous_to_anomalous: usize,
}

impl TransitionCounts {
    pub fn significant(&self) -> usize {
        self.normal_to_anomalous + self.anomalous_to_normal
    }

    pub fn total(&self) -> usize {
        self.normal_to_normal
            + self.normal_to_anomalous
            + self.anomalous_to_normal
            + self.anomalous_to_anomalous
    }
}

/// Partition of the samples for a single `delta`, by direct membership tests.
pub fn transition_counts(pair: &DynamicsPair, delta: usize) -> TransitionCounts {
    let mut t = TransitionCounts::default();
    for (a, b) in pair.iter() {
        match (a < delta, b < delta) {
            (true, true) => t.normal_to_normal += 1,
            (true, false) => t.normal_to_anomalous += 1,
            (false, true) => t.anomalous_to_normal += 1,
            (false, false) => t.anomalous_to_anomalous += 1,
        }
    }
    t
}

/// Admissible thresholds for `n` samples: `2..=n-1`.
pub fn threshold_domain(n: usize) -> RangeInclusive<usize> {
    2..=n.saturating_sub(1)
}

fn check_domain(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "threshold search needs at least 3 samples, got {n}"
        )));
    }
    Ok(())
}

/// Significant-change counts for every admissible `delta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingCounts {
    n: usize,
    totals: Vec<u64>,
}

impl CrossingCounts {
    /// Wraps precomputed totals, `totals[k]` belonging to `delta = k + 2`.
    pub fn from_totals(n: usize, totals: Vec<u64>) -> Result<Self> {
        check_domain(n)?;
        if totals.len() != n - 2 {
            return Err(Error::shape(format!("{} counts", n - 2), totals.len()));
        }
        Ok(Self { n, totals })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn deltas(&self) -> RangeInclusive<usize> {
        threshold_domain(self.n)
    }

    pub fn count(&self, delta: usize) -> u64 {
        self.totals[delta - 2]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.totals
    }

    /// `count(delta) / (delta * (n - delta))`.
    pub fn scaled(&self, delta: usize) -> f64 {
        self.count(delta) as f64 / (delta * (self.n - delta)) as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.deltas().zip(self.totals.iter().copied())
    }
}

/// Crossing counts split by direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionalCrossings {
    n: usize,
    normal_to_anomalous: Vec<u64>,
    anomalous_to_normal: Vec<u64>,
}

impl DirectionalCrossings {
    pub fn normal_to_anomalous(&self, delta: usize) -> u64 {
        self.normal_to_anomalous[delta - 2]
    }

    pub fn anomalous_to_normal(&self, delta: usize) -> u64 {
        self.anomalous_to_normal[delta - 2]
    }

    pub fn total(&self) -> CrossingCounts {
        CrossingCounts {
            n: self.n,
            totals: self
                .normal_to_anomalous
                .iter()
                .zip(&self.anomalous_to_normal)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// A sample moving from rank `a` to rank `b` crosses every `delta` in
/// `(min(a, b), max(a, b)]`; both directions are accumulated with
/// difference arrays in `O(n)`.
pub fn directional_crossings(pair: &DynamicsPair) -> Result<DirectionalCrossings> {
    let n = pair.len();
    check_domain(n)?;
    let mut up = vec![0i64; n + 2];
    let mut down = vec![0i64; n + 2];
    for (a, b) in pair.iter() {
        if a < b {
            up[a + 1] += 1;
            up[b + 1] -= 1;
        } else if b < a {
            down[b + 1] += 1;
            down[a + 1] -= 1;
        }
    }
    let prefix = |diff: Vec<i64>| -> Vec<u64> {
        let mut acc = 0i64;
        let mut out = Vec::with_capacity(n - 2);
        for (delta, d) in diff.into_iter().enumerate().take(n) {
            acc += d;
            if delta >= 2 {
                out.push(acc as u64);
            }
        }
        out
    };
    Ok(DirectionalCrossings {
        n,
        normal_to_anomalous: prefix(up),
        anomalous_to_normal: prefix(down),
    })
}

pub fn crossing_counts(pair: &DynamicsPair) -> Result<CrossingCounts> {
    Ok(directional_crossings(pair)?.total())
}

/// Every `delta` attaining the minimum of `count(delta) / (delta * (n - delta))`,
/// ascending. Objectives are compared as exact rationals.
pub fn threshold_minimizers(counts: &CrossingCounts) -> Vec<usize> {
    let n = counts.n as u128;
    let mut best: Vec<usize> = Vec::new();
    let (mut best_c, mut best_area) = (0u128, 0u128);
    for (delta, c) in counts.iter() {
        let area = delta as u128 * (n - delta as u128);
        let c = c as u128;
        if best.is_empty() || c * best_area < best_c * area {
            best.clear();
            best.push(delta);
            best_c = c;
            best_area = area;
        } else if c * best_area == best_c * area {
            best.push(delta);
        }
    }
    best
}

/// Minimizer of the scaled crossing count. Ties go to the candidate nearest
/// `anchor` when one is given, otherwise to the largest area
/// `delta * (n - delta)`; remaining ties go to the smaller `delta`.
///
/// Once ranks settle, whole runs of thresholds see zero crossings and tie
/// exactly. Anchoring on the running mean keeps the selection where the
/// earlier, informative epochs put it instead of jumping to an edge.
pub fn select_threshold_near(counts: &CrossingCounts, anchor: Option<f64>) -> usize {
    let n = counts.n;
    let candidates = threshold_minimizers(counts);
    let mut best = candidates[0];
    for &delta in &candidates[1..] {
        let better = match anchor {
            Some(a) => (delta as f64 - a).abs() < (best as f64 - a).abs(),
            None => delta * (n - delta) > best * (n - best),
        };
        if better {
            best = delta;
        }
    }
    best
}

/// Minimizer of the scaled crossing count, ties going to the largest area.
pub fn select_threshold(counts: &CrossingCounts) -> usize {
    select_threshold_near(counts, None)
}

/// Selected thresholds so far, their running mean and the current pseudo-normal set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    history: Vec<usize>,
    running_mean: Option<f64>,
    pseudo_normal: Vec<usize>,
}

impl ThresholdState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn history(&self) -> &[usize] {
        &self.history
    }

    pub fn running_mean(&self) -> Option<f64> {
        self.running_mean
    }

    pub fn pseudo_normal(&self) -> &[usize] {
        &self.pseudo_normal
    }

    pub fn set_pseudo_normal(&mut self, indices: Vec<usize>) {
        self.pseudo_normal = indices;
    }
}

/// Appends `delta` and returns the new (unrounded) mean of all selected thresholds.
pub fn update_running_threshold(state: &mut ThresholdState, delta: usize) -> f64 {
    state.history.push(delta);
    let sum: u64 = state.history.iter().map(|&d| d as u64).sum();
    let mean = sum as f64 / state.history.len() as f64;
    state.running_mean = Some(mean);
    mean
}

/// Outcome of pseudo-normal selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PseudoNormalSet {
    Subset(Vec<usize>),
    /// No sample qualified; the caller trains on the full dataset instead.
    Empty,
}

impl PseudoNormalSet {
    pub fn is_empty(&self) -> bool {
        matches!(self, PseudoNormalSet::Empty)
    }

    pub fn len(&self) -> usize {
        match self {
            PseudoNormalSet::Subset(v) => v.len(),
            PseudoNormalSet::Empty => 0,
        }
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            PseudoNormalSet::Subset(v) => v,
            PseudoNormalSet::Empty => &[],
        }
    }
}

/// 0-based indices of samples ranked strictly below `mean_threshold` in both epochs.
pub fn pseudo_normal_set(pair: &DynamicsPair, mean_threshold: f64) -> PseudoNormalSet {
    let chosen: Vec<usize> = pair
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| (*a as f64) < mean_threshold && (*b as f64) < mean_threshold)
        .map(|(i, _)| i)
        .collect();
    if chosen.is_empty() {
        PseudoNormalSet::Empty
    } else {
        PseudoNormalSet::Subset(chosen)
    }
}
