//! Brute-force oracles and fixtures shared by the integration tests.
//!
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use flowsentry::diffcore::{DeterministicRng, Tensor};
use flowsentry::nets::{Architecture, FeatureLayout, ModelBundle};
use flowsentry::payflow::SynthConfig;

/// Counts by direct enumeration: (tp, fp, tn, fn).
pub fn confusion_oracle(preds: &[bool], labels: &[bool]) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for (&p, &y) in preds.iter().zip(labels) {
        match (p, y) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, false) => c.2 += 1,
            (false, true) => c.3 += 1,
        }
    }
    c
}

/// F1 as a reduced fraction `2tp / (2tp + fp + fn)`, with 0/0 read as 0.
fn f1_fraction(tp: usize, fp: usize, fn_: usize) -> (u64, u64) {
    let den = 2 * tp + fp + fn_;
    if tp == 0 {
        (0, 1)
    } else {
        ((2 * tp) as u64, den as u64)
    }
}

/// Pairwise Mann-Whitney AUC: wins plus half of ties over all pos/neg pairs.
pub fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Exhaustive threshold search over 0, 1 and every midpoint of distinct
/// scores. F1 values are compared as exact fractions and ties prefer the
/// larger threshold. A winning threshold of 0 is reported as the smallest
/// score. Returns (theta, tp, fp, fn).
pub fn calibrate_oracle(scores: &[f64], labels: &[bool]) -> (f64, usize, usize, usize) {
    let mut distinct = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = vec![0.0];
    for w in distinct.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(1.0);

    let mut best: Option<(f64, (u64, u64), (usize, usize, usize))> = None;
    for &theta in &candidates {
        let preds: Vec<bool> = scores.iter().map(|&s| s >= theta).collect();
        let (tp, fp, _, fn_) = confusion_oracle(&preds, labels);
        let f = f1_fraction(tp, fp, fn_);
        let better = match best {
            None => true,
            // a/b >= c/d  <=>  a*d >= c*b
            Some((_, g, _)) => f.0 * g.1 >= g.0 * f.1,
        };
        if better {
            best = Some((theta, f, (tp, fp, fn_)));
        }
    }
    let (mut theta, _, (tp, fp, fn_)) = best.unwrap();
    if theta == 0.0 {
        theta = distinct[0].max(0.0);
    }
    (theta, tp, fp, fn_)
}

/// KL(N(mu, exp(log_var)) || N(0, 1)) by composite Simpson quadrature of
/// `q(z) (log q(z) - log p(z))` over mu +- 14 sigma.
pub fn kl_quadrature(mu: f64, log_var: f64) -> f64 {
    let var = log_var.exp();
    let sd = var.sqrt();
    let (a, b) = (mu - 14.0 * sd, mu + 14.0 * sd);
    let n = 40_000;
    let h = (b - a) / n as f64;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let f = |z: f64| {
        let log_q = -0.5 * (ln_2pi + log_var) - (z - mu).powi(2) / (2.0 * var);
        let log_p = -0.5 * ln_2pi - 0.5 * z * z;
        log_q.exp() * (log_q - log_p)
    };
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Rows drawn from N(mean, I).
pub fn gaussian_rows(rng: &mut DeterministicRng, n: usize, mean: &[f64]) -> Tensor {
    let d = mean.len();
    let data = (0..n * d).map(|i| mean[i % d] + rng.normal()).collect();
    Tensor::new(vec![n, d], data).unwrap()
}

pub fn small_architecture() -> Architecture {
    Architecture {
        latent_dim: 2,
        generator_hidden: vec![8],
        discriminator_hidden: vec![8],
        encoder_hidden: vec![8],
        decoder_hidden: vec![8],
    }
}

pub fn small_bundle(seed: u64, width: usize) -> ModelBundle {
    let mut rng = DeterministicRng::new(seed);
    ModelBundle::new(&small_architecture(), FeatureLayout::continuous(width), &mut rng).unwrap()
}

/// Synthetic data set used by the detection-quality checks: about 20k
/// records with 1% fraud and 0.5% laundering.
pub fn detection_data_config() -> SynthConfig {
    SynthConfig {
        n_accounts: 1000,
        n_steps: 200,
        fraud_rate: 0.01,
        laundering_rate: 0.005,
        seed: 7,
        activity: 0.104,
    }
}
