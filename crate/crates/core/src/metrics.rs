//! Threshold-free ranking metrics and confusion-matrix statistics.
//! Label `true` marks an anomaly, the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_inputs<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", scores.len()),
            labels.len(),
        ));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("NaN score at sample {i}")));
    }
    Ok(())
}

/// Index groups of equal scores, ordered by ascending score.
fn tie_groups<T: Scalar>(scores: &[T]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann-Whitney U with mid-ranks).
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC AUC needs both positive and negative labels".into(),
        ));
    }
    let mut rank_sum = 0.0;
    let mut seen = 0usize;
    for group in tie_groups(scores) {
        let mid = seen as f64 + (group.len() as f64 + 1.0) / 2.0;
        rank_sum += mid * group.iter().filter(|&&i| labels[i]).count() as f64;
        seen += group.len();
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Average precision: `sum_k P(k) * (R(k) - R(k-1))` over descending score
/// cuts, each group of tied scores forming one cut.
pub fn pr_auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return Err(Error::UndefinedMetric("PR AUC needs at least one positive label".into()));
    }
    let (mut tp, mut fp, mut ap) = (0usize, 0usize, 0.0);
    for group in tie_groups(scores).into_iter().rev() {
        let gained = group.iter().filter(|&&i| labels[i]).count();
        tp += gained;
        fp += group.len() - gained;
        if gained > 0 {
            ap += (tp as f64 / (tp + fp) as f64) * (gained as f64 / pos as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassificationReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Confusion counts with precision/recall/F1; empty denominators give 0.
pub fn classify_and_report(predictions: &[bool], labels: &[bool]) -> Result<ClassificationReport> {
    if predictions.len() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", predictions.len()),
            labels.len(),
        ));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(ClassificationReport::from_counts(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_examples() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.9, 1.0], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 5], &[true, false, true, false, false]).unwrap(), 0.5);
    }

    #[test]
    fn roc_single_class_is_undefined() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(roc_auc(&[0.1, 0.2], &[false, false]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(roc_auc(&[0.1], &[false, true]), Err(Error::Shape { .. })));
    }

    #[test]
    fn pr_examples() {
        let ap = pr_auc(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-12);
        assert_eq!(pr_auc(&[0.9, 0.8, 0.1, 0.05], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(pr_auc(&[-3.0], &[true]).unwrap(), 1.0);
        assert!(matches!(pr_auc(&[0.3, 0.2], &[false, false]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn pr_ties_form_one_cut() {
        // One cut holding a positive and a negative: precision 1/2 at recall 1.
        assert_eq!(pr_auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
    }

    #[test]
    fn report_examples() {
        let r = classify_and_report(
            &[true, true, true, false, false],
            &[true, true, false, true, false],
        )
        .unwrap();
        assert_eq!((r.tp, r.fp, r.fn_, r.tn), (2, 1, 1, 1));
        for v in [r.precision, r.recall, r.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }

        let r = classify_and_report(&[false; 3], &[true, false, true]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));

        let labels = [true, false, false, true];
        let r = classify_and_report(&labels, &labels).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.total(), 4);

        assert!(classify_and_report(&[true], &[true, false]).is_err());
    }
}
