//! Anomaly scoring from a trained bundle, threshold calibration and
//! classification.
//!
//! A score mixes discriminator evidence `1 - D(x)` with a squashed
//! reconstruction error of `decoder(mu(x))`, weighted by `alpha`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffcore::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::evalkit::{confusion, metrics};
use crate::nets::ModelBundle;

/// Quantile of validation-normal reconstruction errors used as `recon_scale`.
pub const RECON_SCALE_QUANTILE: f64 = 0.9;

/// Rows scored per tape; keeps tapes small and lets rayon split work.
const SCORE_CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    /// Weight on the discriminator part, in `[0, 1]`.
    pub alpha: f64,
    /// Positive normalizer of the reconstruction error.
    pub recon_scale: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            recon_scale: 1.0,
        }
    }
}

impl ScoreWeights {
    pub fn new(alpha: f64, recon_scale: f64) -> Result<Self> {
        let w = Self { alpha, recon_scale };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.recon_scale > 0.0 && self.recon_scale.is_finite()) {
            return Err(Error::Config(format!(
                "recon_scale must be positive, got {}",
                self.recon_scale
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScore {
    pub value: f64,
    /// `1 - D(x)`.
    pub d_part: f64,
    /// `1 - exp(-recon_err / recon_scale)`.
    pub r_part: f64,
    pub recon_err: f64,
}

impl AnomalyScore {
    pub fn combine(weights: &ScoreWeights, d_x: f64, recon_err: f64) -> Self {
        let d_part = 1.0 - d_x;
        let r_part = 1.0 - (-recon_err / weights.recon_scale).exp();
        Self {
            value: weights.alpha * d_part + (1.0 - weights.alpha) * r_part,
            d_part,
            r_part,
            recon_err,
        }
    }
}

/// Discriminator output and reconstruction error for each row of `xs`.
/// The reconstruction decodes the posterior mean, so no noise is drawn.
pub fn raw_evidence(bundle: &ModelBundle, xs: &Tensor) -> Result<Vec<(f64, f64)>> {
    if xs.shape().len() != 2 || xs.cols() != bundle.feature_dim() {
        return Err(Error::Shape {
            op: "score",
            lhs: vec![bundle.feature_dim()],
            rhs: xs.shape().to_vec(),
        });
    }
    let rows: Vec<usize> = (0..xs.rows()).collect();
    let chunks: Vec<Result<Vec<(f64, f64)>>> = rows
        .par_chunks(SCORE_CHUNK)
        .map(|idx| evidence_chunk(bundle, &xs.select_rows(idx)?))
        .collect();
    let mut out = Vec::with_capacity(xs.rows());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn evidence_chunk(bundle: &ModelBundle, xs: &Tensor) -> Result<Vec<(f64, f64)>> {
    let mut tape = Tape::new();
    let x = tape.constant(xs.clone());
    let d = bundle.discriminator_forward(&mut tape, x, false)?;
    let enc = bundle.encoder_forward(&mut tape, x, false)?;
    let dec = bundle.decoder_forward(&mut tape, enc.mu, false)?;
    let mut recon = tape.value(dec.output).clone();
    if let Some((s, e)) = bundle.layout().categorical {
        let width = recon.cols();
        for row in recon.data_mut().chunks_mut(width) {
            softmax_in_place(&mut row[s..e]);
        }
    }
    let d_vals = tape.value(d.output).data();
    let width = xs.cols();
    Ok((0..xs.rows())
        .map(|i| {
            let err = xs
                .row(i)
                .iter()
                .zip(&recon.data()[i * width..(i + 1) * width])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / width as f64;
            (d_vals[i], err)
        })
        .collect())
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

pub fn score(bundle: &ModelBundle, weights: &ScoreWeights, x: &[f64]) -> Result<AnomalyScore> {
    let xs = Tensor::matrix(1, x.len(), x.to_vec())?;
    Ok(score_batch(bundle, weights, &xs)?[0])
}

pub fn score_batch(bundle: &ModelBundle, weights: &ScoreWeights, xs: &Tensor) -> Result<Vec<AnomalyScore>> {
    weights.validate()?;
    Ok(raw_evidence(bundle, xs)?
        .into_iter()
        .map(|(d, e)| AnomalyScore::combine(weights, d, e))
        .collect())
}

/// Reconstruction errors only, e.g. for fitting `recon_scale`.
pub fn reconstruction_errors(bundle: &ModelBundle, xs: &Tensor) -> Result<Vec<f64>> {
    Ok(raw_evidence(bundle, xs)?.into_iter().map(|(_, e)| e).collect())
}

/// Linear-interpolation quantile of a non-empty sample.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(Error::contract("quantile needs values and q in [0, 1]"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// `recon_scale` from validation-normal reconstruction errors.
pub fn fit_recon_scale(normal_errors: &[f64]) -> Result<f64> {
    if normal_errors.is_empty() {
        return Err(Error::Calibration("no normal rows to fit recon_scale".into()));
    }
    Ok(quantile(normal_errors, RECON_SCALE_QUANTILE)?.max(1e-12))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub theta: f64,
    /// F1 on the calibration data at `theta`.
    pub f1: f64,
}

/// Picks the threshold maximizing F1 (suspicious iff `score >= theta`) over
/// 0, 1 and the midpoints between consecutive distinct scores; ties go to
/// the larger threshold. When predicting everything suspicious wins, the
/// smallest score is returned rather than 0, which flags the same rows.
pub fn calibrate_threshold(scores: &[f64], labels: &[bool]) -> Result<CalibratedThreshold> {
    if scores.len() != labels.len() {
        return Err(Error::contract("calibrate_threshold: length mismatch"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Calibration("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::Calibration(
            "calibration data must contain both suspicious and normal rows".into(),
        ));
    }
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let mut candidates = Vec::with_capacity(distinct.len() + 1);
    candidates.push(0.0);
    candidates.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(1.0);

    // sweep candidates upwards, tracking how many rows sit at or above theta
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut below = 0;
    let mut pos_below = 0;
    let mut best = CalibratedThreshold { theta: 0.0, f1: -1.0 };
    for &theta in &candidates {
        while below < order.len() && scores[order[below]] < theta {
            if labels[order[below]] {
                pos_below += 1;
            }
            below += 1;
        }
        let tp = n_pos - pos_below;
        let fp = (order.len() - below) - tp;
        // 2tp / (2tp + fp + fn): equal F1 values map to identical floats, so
        // the tie rule is exact
        let f1 = (2 * tp) as f64 / (2 * tp + fp + (n_pos - tp)) as f64;
        if f1 >= best.f1 {
            best = CalibratedThreshold { theta, f1 };
        }
    }
    if best.theta == 0.0 {
        best.theta = distinct[0].max(0.0);
    }
    // report F1 through the shared metric path so both always agree
    let preds: Vec<bool> = scores.iter().map(|&s| s >= best.theta).collect();
    best.f1 = metrics(&confusion(&preds, labels)?)?.f1;
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Normal,
    Suspicious,
}

impl Verdict {
    pub fn is_suspicious(self) -> bool {
        self == Verdict::Suspicious
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Normal => "normal",
            Verdict::Suspicious => "suspicious",
        }
    }
}

pub fn classify_scores(scores: &[f64], theta: f64) -> Vec<Verdict> {
    scores
        .iter()
        .map(|&s| if s >= theta { Verdict::Suspicious } else { Verdict::Normal })
        .collect()
}

pub fn classify(bundle: &ModelBundle, weights: &ScoreWeights, theta: f64, xs: &Tensor) -> Result<Vec<Verdict>> {
    let scores: Vec<f64> = score_batch(bundle, weights, xs)?.iter().map(|s| s.value).collect();
    Ok(classify_scores(&scores, theta))
}

/// Writes `id,score,d_part,r_part,verdict` rows; ids are 0-based row numbers.
pub fn write_scored_csv<W: Write>(writer: W, scores: &[AnomalyScore], theta: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "score", "d_part", "r_part", "verdict"])?;
    for (i, s) in scores.iter().enumerate() {
        let verdict = if s.value >= theta { Verdict::Suspicious } else { Verdict::Normal };
        w.write_record([
            i.to_string(),
            s.value.to_string(),
            s.d_part.to_string(),
            s.r_part.to_string(),
            verdict.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<scored writer>", e))?;
    Ok(())
}
