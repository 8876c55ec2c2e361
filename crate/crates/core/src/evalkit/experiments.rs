use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics, roc_auc, MetricReport};
use crate::detect::{calibrate_threshold, CalibratedThreshold, fit_recon_scale, raw_evidence, AnomalyScore, ScoreWeights};
use crate::diffcore::DeterministicRng;
use crate::error::{Error, Result};
use crate::nets::{Architecture, ModelBundle};
use crate::payflow::{
    cross_time_split, encode_all, feature_layout, sparsify, DatasetSplit, NormalizationStats, PatternLabel,
    TransactionRecord,
};
use crate::trainloop::{train_with, Procedure, TrainConfig, Trained};

/// Stream tag for weight initialization, separate from the training stream.
const INIT_STREAM: u64 = 0x494e_4954;

/// Candidate score mixes searched when alpha is left to calibration.
pub const ALPHA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Adversarial training only, scored by the discriminator.
    Gan,
    /// Variational training only, scored by reconstruction.
    Vae,
    /// Joint training, scored by the mixed score.
    Joint,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gan, ModelKind::Vae, ModelKind::Joint];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gan => "gan",
            ModelKind::Vae => "vae",
            ModelKind::Joint => "joint",
        }
    }

    pub fn procedure(self) -> Procedure {
        match self {
            ModelKind::Gan => Procedure::Gan,
            ModelKind::Vae => Procedure::Vae,
            ModelKind::Joint => Procedure::Joint,
        }
    }

    /// Weight on discriminator evidence used when none is configured.
    /// `None` means the weight is chosen on the calibration holdout.
    pub fn default_alpha(self) -> Option<f64> {
        match self {
            ModelKind::Gan => Some(1.0),
            ModelKind::Vae => Some(0.0),
            ModelKind::Joint => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model kind {s:?} (expected gan, vae or joint)"))
    }
}

/// Settings shared by every experiment pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Share of records (by time) used for training.
    pub train_fraction: f64,
    /// Trailing share of the training period held out for calibration.
    pub calibration_fraction: f64,
    /// Fit the networks on normal rows only.
    pub normal_only: bool,
    /// Overrides the model kind's default score mix. Left unset for the
    /// joint model, the mix is picked from `ALPHA_GRID` on the holdout.
    pub alpha: Option<f64>,
    pub architecture: Architecture,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            calibration_fraction: 0.2,
            normal_only: true,
            alpha: None,
            architecture: Architecture::default(),
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train_fraction", self.train_fraction),
            ("calibration_fraction", self.calibration_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if let Some(a) = self.alpha {
            ScoreWeights::new(a, 1.0)?;
        }
        self.train.validate()
    }
}

/// One trained, calibrated and evaluated pipeline.
#[derive(Clone, Debug)]
pub struct EvaluatedRun {
    pub kind: ModelKind,
    pub seed: u64,
    pub report: MetricReport,
    pub auc: f64,
    pub theta: f64,
    pub weights: ScoreWeights,
    pub stats: NormalizationStats,
    pub trained: Trained,
    pub test_scores: Vec<AnomalyScore>,
    pub test_labels: Vec<PatternLabel>,
}

fn suspicious(labels: &[PatternLabel]) -> Vec<bool> {
    labels.iter().map(|l| l.is_suspicious()).collect()
}

/// A trained model with its detector settings.
#[derive(Clone, Debug)]
pub struct FittedDetector {
    pub trained: Trained,
    pub weights: ScoreWeights,
    /// `None` when the calibration tail holds a single class.
    pub theta: Option<f64>,
}

/// Score mix used when alpha is left to calibration but the holdout cannot
/// calibrate it.
pub const FALLBACK_ALPHA: f64 = 0.5;

/// Trains `kind` on all but the trailing `calibration_fraction` of `train`
/// (normal rows only when configured), then fits the reconstruction scale,
/// the score mix and the threshold on that tail.
pub fn fit_detector(
    train: &[TransactionRecord],
    stats: &NormalizationStats,
    kind: ModelKind,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<FittedDetector> {
    config.validate()?;
    let inner = cross_time_split(train, 1.0 - config.calibration_fraction)?;
    let fit_rows: Vec<TransactionRecord> = inner
        .train
        .iter()
        .filter(|r| !config.normal_only || !r.label.is_suspicious())
        .cloned()
        .collect();
    if fit_rows.is_empty() {
        return Err(Error::contract("no training rows left after filtering"));
    }

    let mut init = DeterministicRng::with_stream(seed, INIT_STREAM);
    let bundle = ModelBundle::new(&config.architecture, feature_layout(), &mut init)?;
    let train_cfg = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let x_fit = encode_all(&fit_rows, stats)?;
    let trained = train_with(&bundle, &x_fit, &train_cfg, kind.procedure(), None)?;

    let calib_x = encode_all(&inner.test, stats)?;
    let calib_ev = raw_evidence(&trained.bundle, &calib_x)?;
    let normal_errors: Vec<f64> = calib_ev
        .iter()
        .zip(&inner.test)
        .filter(|(_, r)| !r.label.is_suspicious())
        .map(|((_, e), _)| *e)
        .collect();
    let recon_scale = fit_recon_scale(&normal_errors)?;
    let calib_labels: Vec<PatternLabel> = inner.test.iter().map(|r| r.label).collect();
    let calib_truth = suspicious(&calib_labels);
    let configured = config.alpha.or(kind.default_alpha());
    let positives = calib_truth.iter().filter(|&&y| y).count();
    if positives == 0 || positives == calib_truth.len() {
        log::warn!("calibration tail holds a single class; threshold left unset");
        return Ok(FittedDetector {
            trained,
            weights: ScoreWeights::new(configured.unwrap_or(FALLBACK_ALPHA), recon_scale)?,
            theta: None,
        });
    }
    let candidates: Vec<f64> = match configured {
        Some(a) => vec![a],
        None => ALPHA_GRID.to_vec(),
    };
    let mut best: Option<(ScoreWeights, CalibratedThreshold)> = None;
    for alpha in candidates {
        let w = ScoreWeights::new(alpha, recon_scale)?;
        let scores: Vec<f64> = calib_ev
            .iter()
            .map(|&(d, e)| AnomalyScore::combine(&w, d, e).value)
            .collect();
        let cal = calibrate_threshold(&scores, &calib_truth)?;
        if best.as_ref().is_none_or(|(_, b)| cal.f1 > b.f1) {
            best = Some((w, cal));
        }
    }
    let (weights, calibrated) = best.expect("at least one alpha candidate");
    Ok(FittedDetector {
        trained,
        weights,
        theta: Some(calibrated.theta),
    })
}

/// Trains `kind` on the split's training side, calibrates on its trailing
/// `calibration_fraction`, and evaluates on the test side.
pub fn evaluate_split(split: &DatasetSplit, kind: ModelKind, config: &ExperimentConfig, seed: u64) -> Result<EvaluatedRun> {
    let stats = &split.stats;
    let FittedDetector { trained, weights, theta } = fit_detector(&split.train, stats, kind, config, seed)?;
    let theta = theta.ok_or_else(|| {
        Error::Calibration("calibration holdout must contain both suspicious and normal rows".into())
    })?;

    let test_x = encode_all(&split.test, stats)?;
    let test_scores: Vec<AnomalyScore> = raw_evidence(&trained.bundle, &test_x)?
        .into_iter()
        .map(|(d, e)| AnomalyScore::combine(&weights, d, e))
        .collect();
    let test_labels: Vec<PatternLabel> = split.test.iter().map(|r| r.label).collect();
    let truth = suspicious(&test_labels);
    let values: Vec<f64> = test_scores.iter().map(|s| s.value).collect();
    let preds: Vec<bool> = values.iter().map(|&v| v >= theta).collect();
    let report = metrics(&confusion(&preds, &truth)?)?;
    let auc = roc_auc(&values, &truth)?;
    log::info!(
        "{kind} seed {seed}: f1 {:.4} auc {:.4} alpha {} theta {theta:.4}",
        report.f1,
        auc,
        weights.alpha
    );
    Ok(EvaluatedRun {
        kind,
        seed,
        report,
        auc,
        theta,
        weights,
        stats: stats.clone(),
        trained,
        test_scores,
        test_labels,
    })
}

/// Cross-time pipeline: split, train, calibrate on the training tail, test.
pub fn run_cross_time(
    records: &[TransactionRecord],
    train_fraction: f64,
    kind: ModelKind,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<EvaluatedRun> {
    let split = cross_time_split(records, train_fraction)?;
    evaluate_split(&split, kind, config, seed)
}

/// Per-pattern one-vs-rest results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternBreakdown {
    pub seed: u64,
    pub entries: Vec<PatternEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub label: PatternLabel,
    pub report: MetricReport,
    pub auc: Option<f64>,
}

impl PatternBreakdown {
    pub fn f1(&self, label: PatternLabel) -> Option<f64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.report.f1)
    }
}

/// NORMAL counts a row as positive when it is labelled normal and predicted
/// normal, over all rows. FRAUD and LAUNDERING restrict to rows of that label
/// plus NORMAL rows, positive = suspicious.
pub fn pattern_breakdown(labels: &[PatternLabel], scores: &[f64], theta: f64, seed: u64) -> Result<PatternBreakdown> {
    let mut entries = Vec::new();
    for label in PatternLabel::ALL {
        if !labels.contains(&label) {
            continue;
        }
        let (truth, pred, s): (Vec<bool>, Vec<bool>, Vec<f64>) = if label == PatternLabel::Normal {
            let truth = labels.iter().map(|&l| l == PatternLabel::Normal).collect();
            let pred = scores.iter().map(|&v| v < theta).collect();
            let s = scores.iter().map(|&v| -v).collect();
            (truth, pred, s)
        } else {
            let rows: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == label || labels[i] == PatternLabel::Normal)
                .collect();
            (
                rows.iter().map(|&i| labels[i] == label).collect(),
                rows.iter().map(|&i| scores[i] >= theta).collect(),
                rows.iter().map(|&i| scores[i]).collect(),
            )
        };
        let report = metrics(&confusion(&pred, &truth)?)?;
        let auc = roc_auc(&s, &truth).ok();
        entries.push(PatternEntry { label, report, auc });
    }
    Ok(PatternBreakdown { seed, entries })
}

fn require_all_labels(records: &[TransactionRecord], side: &str) -> Result<()> {
    for label in PatternLabel::ALL {
        if !records.iter().any(|r| r.label == label) {
            return Err(Error::MissingClass(format!("{label} (in the {side} set)")));
        }
    }
    Ok(())
}

/// Breakdown of an already evaluated run.
pub fn breakdown_of(run: &EvaluatedRun) -> Result<PatternBreakdown> {
    let scores: Vec<f64> = run.test_scores.iter().map(|s| s.value).collect();
    pattern_breakdown(&run.test_labels, &scores, run.theta, run.seed)
}

/// Trains the joint model once and reports one-vs-rest metrics per pattern.
pub fn run_pattern_breakdown(records: &[TransactionRecord], config: &ExperimentConfig, seed: u64) -> Result<PatternBreakdown> {
    let split = cross_time_split(records, config.train_fraction)?;
    require_all_labels(&split.test, "test")?;
    let run = evaluate_split(&split, ModelKind::Joint, config, seed)?;
    breakdown_of(&run)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub level: f64,
    pub seed: u64,
    pub report: MetricReport,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsitySweepResult {
    pub levels: Vec<f64>,
    /// Level-major, seeds in the order given.
    pub points: Vec<SweepPoint>,
}

impl SparsitySweepResult {
    /// Median F1 across seeds at each level.
    pub fn median_f1(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|&l| median(self.points.iter().filter(|p| p.level == l).map(|p| p.report.f1).collect()))
            .collect()
    }
}

/// Median; mean of the middle pair for even counts.
pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// For every level and seed: sparsify the cross-time training side, train
/// the joint model, evaluate. Runs points in parallel.
pub fn run_sparsity_sweep(
    records: &[TransactionRecord],
    levels: &[f64],
    seeds: &[u64],
    config: &ExperimentConfig,
) -> Result<SparsitySweepResult> {
    if levels.is_empty() || seeds.is_empty() {
        return Err(Error::contract("sweep needs at least one level and one seed"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|l| !(0.0..1.0).contains(l)) {
        return Err(Error::Config("sparsity levels must be strictly increasing in [0, 1)".into()));
    }
    let split = cross_time_split(records, config.train_fraction)?;
    let jobs: Vec<(f64, u64)> = levels.iter().flat_map(|&l| seeds.iter().map(move |&s| (l, s))).collect();
    let points = jobs
        .par_iter()
        .map(|&(level, seed)| {
            let reduced = sparsify(&split, level, seed)?;
            let run = evaluate_split(&reduced, ModelKind::Joint, config, seed)?;
            Ok(SweepPoint {
                level,
                seed,
                report: run.report,
                auc: run.auc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparsitySweepResult {
        levels: levels.to_vec(),
        points,
    })
}
