use super::features::{fit_stats, NormalizationStats};
use super::record::{PatternLabel, TransactionRecord};
use crate::diffcore::DeterministicRng;
use crate::error::{Error, Result};

/// Train/test partition with normalization fitted on the training side.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<TransactionRecord>,
    pub test: Vec<TransactionRecord>,
    pub stats: NormalizationStats,
}

/// Splits at the smallest step `b` whose prefix holds at least
/// `train_fraction` of the records: train is `step <= b`, test `step > b`.
pub fn cross_time_split(records: &[TransactionRecord], train_fraction: f64) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::contract(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if records.is_empty() {
        return Err(Error::contract("cannot split an empty record list"));
    }
    let mut steps: Vec<u32> = records.iter().map(|r| r.step).collect();
    steps.sort_unstable();
    let need = train_fraction * records.len() as f64;
    let mut boundary = *steps.last().unwrap();
    for (i, &s) in steps.iter().enumerate() {
        let is_last_of_step = steps.get(i + 1) != Some(&s);
        if is_last_of_step && (i + 1) as f64 >= need {
            boundary = s;
            break;
        }
    }
    if boundary == *steps.last().unwrap() {
        return Err(Error::Split(format!(
            "no records after step {boundary}; need at least two distinct steps to cross time"
        )));
    }
    let (train, test): (Vec<_>, Vec<_>) = records.iter().cloned().partition(|r| r.step <= boundary);
    let stats = fit_stats(&train)?;
    Ok(DatasetSplit { train, test, stats })
}

/// Number of records of one class kept at the given sparsity.
pub fn kept_count(class_size: usize, sparsity: f64) -> usize {
    if class_size == 0 {
        return 0;
    }
    (((1.0 - sparsity) * class_size as f64).round() as usize).clamp(1, class_size)
}

/// Subsamples the training side per label, keeping `1 - sparsity` of each
/// class (at least one). Test records are untouched; stats are refitted.
pub fn sparsify(split: &DatasetSplit, sparsity: f64, seed: u64) -> Result<DatasetSplit> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::contract(format!("sparsity must lie in [0, 1), got {sparsity}")));
    }
    let mut rng = DeterministicRng::new(seed);
    let mut keep = vec![false; split.train.len()];
    for label in PatternLabel::ALL {
        let mut idx: Vec<usize> = (0..split.train.len())
            .filter(|&i| split.train[i].label == label)
            .collect();
        let k = kept_count(idx.len(), sparsity);
        rng.shuffle(&mut idx);
        for &i in &idx[..k] {
            keep[i] = true;
        }
    }
    let train: Vec<_> = split
        .train
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    let stats = fit_stats(&train)?;
    Ok(DatasetSplit {
        train,
        test: split.test.clone(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payflow::{label_counts, TxType};

    fn rec(step: u32, label: PatternLabel) -> TransactionRecord {
        TransactionRecord {
            step,
            tx_type: TxType::Payment,
            amount: f64::from(step),
            orig_account: "C1".into(),
            orig_balance_before: 10.0,
            orig_balance_after: 0.0,
            dest_account: "M1".into(),
            dest_balance_before: 0.0,
            dest_balance_after: 0.0,
            label,
        }
    }

    fn steps(rs: &[TransactionRecord]) -> Vec<u32> {
        rs.iter().map(|r| r.step).collect()
    }

    #[test]
    fn uniform_steps() {
        let rs: Vec<_> = (1..=100).map(|s| rec(s, PatternLabel::Normal)).collect();
        let sp = cross_time_split(&rs, 0.8).unwrap();
        assert_eq!(steps(&sp.train), (1..=80).collect::<Vec<_>>());
        assert_eq!(steps(&sp.test), (81..=100).collect::<Vec<_>>());
    }

    #[test]
    fn boundary_takes_whole_step() {
        let rs = vec![
            rec(1, PatternLabel::Normal),
            rec(1, PatternLabel::Normal),
            rec(2, PatternLabel::Normal),
        ];
        let sp = cross_time_split(&rs, 0.5).unwrap();
        assert_eq!(steps(&sp.train), vec![1, 1]);
        assert_eq!(steps(&sp.test), vec![2]);
    }

    #[test]
    fn single_step_cannot_cross_time() {
        let rs = vec![rec(4, PatternLabel::Normal), rec(4, PatternLabel::Normal)];
        assert!(matches!(cross_time_split(&rs, 0.5), Err(Error::Split(_))));
    }

    #[test]
    fn bad_fraction() {
        let rs = vec![rec(1, PatternLabel::Normal), rec(2, PatternLabel::Normal)];
        assert!(cross_time_split(&rs, 0.0).is_err());
        assert!(cross_time_split(&rs, 1.0).is_err());
    }

    fn labelled_split() -> DatasetSplit {
        let mut train: Vec<_> = (0..10).map(|i| rec(i, PatternLabel::Normal)).collect();
        train.extend((0..3).map(|i| rec(i, PatternLabel::Fraud)));
        let test = vec![rec(50, PatternLabel::Laundering)];
        let stats = fit_stats(&train).unwrap();
        DatasetSplit { train, test, stats }
    }

    #[test]
    fn sparsity_zero_is_identity() {
        let sp = labelled_split();
        assert_eq!(sparsify(&sp, 0.0, 1).unwrap(), sp);
    }

    #[test]
    fn half_sparsity_and_class_floor() {
        let sp = labelled_split();
        let half = sparsify(&sp, 0.5, 1).unwrap();
        assert_eq!(label_counts(&half.train)[0], 5);
        let heavy = sparsify(&sp, 0.9, 1).unwrap();
        assert_eq!(label_counts(&heavy.train), [1, 1, 0]);
        assert_eq!(heavy.test, sp.test);
    }

    #[test]
    fn kept_counts() {
        assert_eq!(kept_count(10, 0.5), 5);
        assert_eq!(kept_count(3, 0.9), 1);
        assert_eq!(kept_count(0, 0.9), 0);
    }
}
