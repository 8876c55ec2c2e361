use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with positive = suspicious.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::contract(format!(
            "confusion: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::contract("confusion needs at least one sample"));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Thresholded quality figures. Zero denominators yield 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of actual positives.
    pub support_pos: usize,
    /// Number of actual negatives.
    pub support_neg: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn metrics(c: &ConfusionCounts) -> Result<MetricReport> {
    let total = c.total();
    if total == 0 {
        return Err(Error::contract("metrics of an empty confusion matrix"));
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Ok(MetricReport {
        acc: ratio(c.tp + c.tn, total),
        precision,
        recall,
        f1: f1_score(precision, recall),
        support_pos: c.tp + c.fn_,
        support_neg: c.tn + c.fp,
    })
}

/// Mann-Whitney estimate of P(score_pos > score_neg), ties counted one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::contract(format!(
            "roc_auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::contract("roc_auc: NaN score"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::contract("roc_auc needs both classes"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks (1-based) over tied groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = idx[i..j].iter().filter(|&&k| labels[k]).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(p: f64, r: f64) -> f64 {
        f1_score(p, r)
    }

    #[test]
    fn single_true_positive() {
        let c = confusion(&[true], &[true]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, ..Default::default() });
    }

    #[test]
    fn full_inversion() {
        let labels = [true, true, false, false];
        let preds: Vec<bool> = labels.iter().map(|y| !y).collect();
        let c = confusion(&preds, &labels).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (0, 0, 2, 2));
    }

    #[test]
    fn length_mismatch() {
        assert!(confusion(&[true], &[true, false]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn table_rows_from_precision_recall() {
        assert!((report(0.832, 0.763) - 0.795).abs() <= 0.002);
        assert!((report(0.815, 0.745) - 0.778).abs() < 5e-4);
    }

    #[test]
    fn degenerate_denominators() {
        let m = metrics(&ConfusionCounts { tn: 5, ..Default::default() }).unwrap();
        assert_eq!((m.acc, m.precision, m.recall, m.f1), (1.0, 0.0, 0.0, 0.0));
        assert!(metrics(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 4], &[true, false, true, false]).unwrap(), 0.5);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }
}
