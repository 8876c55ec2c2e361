use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::record::{TransactionRecord, TxType};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::nets::FeatureLayout;

/// Encoded width: amount, 5 one-hot types, 4 balances, sin/cos of hour.
pub const FEATURE_WIDTH: usize = 12;
/// Number of standardized continuous features (amount + four balances).
pub const CONTINUOUS_FEATURES: usize = 5;
/// Hours per simulated day.
pub const DAY_LENGTH: u32 = 24;

const TYPE_OFFSET: usize = 1;
const BALANCE_OFFSET: usize = TYPE_OFFSET + TxType::ALL.len();
const TIME_OFFSET: usize = BALANCE_OFFSET + 4;

/// Layout handed to the networks: the type one-hot is the categorical block.
pub fn feature_layout() -> FeatureLayout {
    FeatureLayout::with_categorical(FEATURE_WIDTH, TYPE_OFFSET, BALANCE_OFFSET)
        .expect("type block lies inside the feature vector")
}

/// Per-feature mean and standard deviation of `log1p` amount and balances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: [f64; CONTINUOUS_FEATURES],
    pub std: [f64; CONTINUOUS_FEATURES],
}

impl Default for NormalizationStats {
    fn default() -> Self {
        NormalizationStats {
            mean: [0.0; CONTINUOUS_FEATURES],
            std: [1.0; CONTINUOUS_FEATURES],
        }
    }
}

fn raw_continuous(r: &TransactionRecord) -> [f64; CONTINUOUS_FEATURES] {
    let b = r.balances();
    [
        r.amount.ln_1p(),
        b[0].ln_1p(),
        b[1].ln_1p(),
        b[2].ln_1p(),
        b[3].ln_1p(),
    ]
}

/// Fits population mean/std over `train`. Zero-variance features get std 1.
pub fn fit_stats(train: &[TransactionRecord]) -> Result<NormalizationStats> {
    if train.is_empty() {
        return Err(Error::contract("fit_stats needs at least one record"));
    }
    let n = train.len() as f64;
    let mut mean = [0.0; CONTINUOUS_FEATURES];
    for r in train {
        for (m, v) in mean.iter_mut().zip(raw_continuous(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; CONTINUOUS_FEATURES];
    for r in train {
        for ((acc, v), m) in var.iter_mut().zip(raw_continuous(r)).zip(mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std = var.map(|v| {
        let s = (v / n).sqrt();
        if s > 1e-12 {
            s
        } else {
            1.0
        }
    });
    Ok(NormalizationStats { mean, std })
}

pub fn encode(r: &TransactionRecord, stats: &NormalizationStats) -> [f64; FEATURE_WIDTH] {
    let raw = raw_continuous(r);
    let z = |i: usize| (raw[i] - stats.mean[i]) / stats.std[i];
    let mut out = [0.0; FEATURE_WIDTH];
    out[0] = z(0);
    out[TYPE_OFFSET + r.tx_type.index()] = 1.0;
    for k in 0..4 {
        out[BALANCE_OFFSET + k] = z(k + 1);
    }
    let phase = 2.0 * PI * f64::from(r.step % DAY_LENGTH) / f64::from(DAY_LENGTH);
    out[TIME_OFFSET] = phase.sin();
    out[TIME_OFFSET + 1] = phase.cos();
    out
}

/// Encodes a record list into an `[n, FEATURE_WIDTH]` tensor.
pub fn encode_all(records: &[TransactionRecord], stats: &NormalizationStats) -> Result<Tensor> {
    if records.is_empty() {
        return Err(Error::contract("cannot encode an empty record list"));
    }
    let mut data = Vec::with_capacity(records.len() * FEATURE_WIDTH);
    for r in records {
        data.extend_from_slice(&encode(r, stats));
    }
    Tensor::new(vec![records.len(), FEATURE_WIDTH], data)
}
