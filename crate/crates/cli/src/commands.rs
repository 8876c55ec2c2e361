use std::fmt::Write as _;
use std::path::Path;

use flowsentry::detect::{calibrate_threshold, score_batch, write_scored_csv};
use flowsentry::evalkit::{
    cross_time_rows, median, pattern_rows, render_table, report_json, run_cross_time, run_pattern_breakdown,
    run_sparsity_sweep, sparsity_rows, fit_detector, write_report_csv, EvaluatedRun, PatternBreakdown, ReportRow,
};
use flowsentry::payflow::{
    encode_all, fit_stats, generate_synthetic, label_counts, load_paysim_csv_with, write_synthetic, LoadOptions,
    PatternLabel, TransactionRecord,
};
use flowsentry::trainloop::{load_checkpoint, Checkpoint, DetectorState, CHECKPOINT_VERSION};
use serde::Serialize;

use crate::config::RunConfig;
use crate::svg;
use crate::CliError;

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

/// Runs a writer-based encoder into memory, so that a failure to open the
/// destination is reported as a write error.
fn render(f: impl FnOnce(&mut Vec<u8>) -> flowsentry::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn load_records(cfg: &RunConfig) -> Result<Vec<TransactionRecord>, CliError> {
    match &cfg.data.csv {
        Some(path) => {
            let opts = LoadOptions {
                max_rows: cfg.data.max_rows,
                skip_malformed: false,
            };
            let report = load_paysim_csv_with(path, &opts)?;
            log::info!("read {} records from {}", report.records.len(), path.display());
            Ok(report.records)
        }
        None => {
            let records = generate_synthetic(&cfg.synthetic)?;
            log::info!("generated {} synthetic records", records.len());
            Ok(records)
        }
    }
}

#[derive(Serialize)]
struct DataSummary {
    rows: usize,
    normal: usize,
    fraud: usize,
    laundering: usize,
    steps: u32,
}

impl DataSummary {
    fn of(records: &[TransactionRecord]) -> Self {
        let [normal, fraud, laundering] = label_counts(records);
        Self {
            rows: records.len(),
            normal,
            fraud,
            laundering,
            steps: records.iter().map(|r| r.step).max().unwrap_or(0),
        }
    }
}

pub fn gen_data(cfg: &RunConfig, output: &Path) -> Result<(), CliError> {
    cfg.synthetic.validate()?;
    let records = generate_synthetic(&cfg.synthetic)?;
    let path = cfg.out_dir.join(output);
    write_file(&path, &render(|b| write_synthetic(b, &records))?)?;
    log::info!("wrote {} records to {}", records.len(), path.display());

    let summary = DataSummary::of(&records);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::new(CliError::INTERNAL, e.to_string()))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into());
    write_file(&path.with_file_name(format!("{stem}.summary.json")), format!("{json}\n").as_bytes())?;
    cfg.echo("gen-data")?;
    println!(
        "rows {}  normal {}  fraud {}  laundering {}  steps {}",
        summary.rows, summary.normal, summary.fraud, summary.laundering, summary.steps
    );
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.experiment.validate()?;
    let records = load_records(cfg)?;
    let stats = fit_stats(&records)?;
    let fitted = fit_detector(&records, &stats, cfg.model, &cfg.experiment, cfg.seed)?;
    if fitted.theta.is_none() {
        log::warn!("no threshold could be calibrated; score with --theta or labeled data");
    }
    let ckpt = Checkpoint {
        bundle: fitted.trained.bundle,
        stats,
        config: flowsentry::trainloop::TrainConfig {
            seed: cfg.seed,
            ..cfg.experiment.train.clone()
        },
        detector: Some(DetectorState {
            weights: fitted.weights,
            theta: fitted.theta,
        }),
        rng_seed: cfg.seed,
        rng_state: fitted.trained.rng_state,
    };
    write_file(&cfg.out_dir.join("model.ckpt"), &ckpt.to_bytes()?)?;
    let trace = &fitted.trained.trace;
    write_file(&cfg.out_dir.join("trace.csv"), &render(|b| trace.write_csv(b))?)?;
    cfg.echo("train")?;

    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    if let Some(last) = trace.last() {
        println!(
            "model {}  epochs {}  L_GAN {}  L_VAE {}  L_Joint {}  D(real) {}  D(fake) {}",
            cfg.model,
            trace.len(),
            cell(last.l_gan),
            cell(last.l_vae),
            cell(last.l_joint),
            cell(last.d_real_mean),
            cell(last.d_fake_mean),
        );
    }
    println!(
        "alpha {}  recon_scale {}  theta {}",
        fitted.weights.alpha,
        fitted.weights.recon_scale,
        cell(fitted.theta)
    );
    Ok(())
}

pub fn score(cfg: &RunConfig, ckpt_path: &Path, theta: Option<f64>, output: &Path) -> Result<(), CliError> {
    if let Some(t) = theta {
        if !t.is_finite() {
            return Err(CliError::usage(format!("--theta must be finite, got {t}")));
        }
    }
    let ckpt = load_checkpoint(ckpt_path).map_err(CliError::checkpoint)?;
    let detector = ckpt
        .detector
        .ok_or_else(|| CliError::new(CliError::CHECKPOINT, "checkpoint carries no detector settings"))?;
    let records = load_records(cfg)?;
    let x = encode_all(&records, &ckpt.stats)?;
    let scores = score_batch(&ckpt.bundle, &detector.weights, &x)?;

    let (theta, source) = match theta {
        Some(t) => (t, "flag"),
        None => {
            let truth: Vec<bool> = records.iter().map(|r| r.label.is_suspicious()).collect();
            let positives = truth.iter().filter(|&&y| y).count();
            if positives > 0 && positives < truth.len() {
                let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
                (calibrate_threshold(&values, &truth)?.theta, "calibrated")
            } else if let Some(t) = detector.theta {
                log::warn!("input holds a single class; using the checkpoint threshold");
                (t, "checkpoint")
            } else {
                return Err(CliError::new(
                    CliError::DATA,
                    "cannot calibrate a threshold on single-class data and the checkpoint has none",
                ));
            }
        }
    };
    let path = cfg.out_dir.join(output);
    write_file(&path, &render(|b| write_scored_csv(b, &scores, theta))?)?;
    let flagged = scores.iter().filter(|s| s.value >= theta).count();
    println!("theta {theta} ({source})  rows {}  suspicious {flagged}", scores.len());
    Ok(())
}

#[derive(Serialize)]
struct CheckpointSummary<'a> {
    version: u32,
    feature_width: usize,
    latent_dim: usize,
    networks: Vec<NetworkSummary>,
    stats: &'a flowsentry::payflow::NormalizationStats,
    config: &'a flowsentry::trainloop::TrainConfig,
    detector: &'a Option<DetectorState>,
    rng_seed: u64,
    rng_state: &'a flowsentry::diffcore::RngState,
}

#[derive(Serialize)]
struct NetworkSummary {
    name: &'static str,
    widths: Vec<usize>,
    parameters: usize,
}

pub fn inspect(ckpt_path: &Path) -> Result<(), CliError> {
    let ckpt = load_checkpoint(ckpt_path).map_err(CliError::checkpoint)?;
    let names = ["generator", "discriminator", "encoder", "decoder"];
    let networks = names
        .iter()
        .zip(ckpt.bundle.networks())
        .map(|(&name, net)| NetworkSummary {
            name,
            widths: net.spec().widths.clone(),
            parameters: net.params().map(|t| t.len()).sum(),
        })
        .collect();
    let summary = CheckpointSummary {
        version: CHECKPOINT_VERSION,
        feature_width: ckpt.bundle.feature_dim(),
        latent_dim: ckpt.bundle.latent_dim(),
        networks,
        stats: &ckpt.stats,
        config: &ckpt.config,
        detector: &ckpt.detector,
        rng_seed: ckpt.rng_seed,
        rng_state: &ckpt.rng_state,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::new(CliError::INTERNAL, e.to_string()))?;
    println!("{json}");
    Ok(())
}

/// Writes `<name>.csv`, `<name>.json` and `<name>.txt` (plus `<name>.svg`
/// when asked) and prints the text report.
fn emit(cfg: &RunConfig, name: &str, rows: &[ReportRow], summary: &str, chart: Option<String>) -> Result<(), CliError> {
    let dir = &cfg.out_dir;
    write_file(&dir.join(format!("{name}.csv")), &render(|b| write_report_csv(b, rows))?)?;
    write_file(&dir.join(format!("{name}.json")), format!("{}\n", report_json(rows)?).as_bytes())?;
    let text = format!("{}\n{summary}", render_table(rows));
    write_file(&dir.join(format!("{name}.txt")), text.as_bytes())?;
    if let Some(svg) = chart {
        write_file(&dir.join(format!("{name}.svg")), svg.as_bytes())?;
    }
    cfg.echo(name)?;
    print!("{text}");
    Ok(())
}

fn prepare(cfg: &RunConfig) -> Result<Vec<TransactionRecord>, CliError> {
    cfg.validate()?;
    load_records(cfg)
}

pub fn cross_time(cfg: &RunConfig, chart: bool) -> Result<(), CliError> {
    if cfg.models.is_empty() {
        return Err(CliError::usage("at least one model is required"));
    }
    let records = prepare(cfg)?;
    let mut runs: Vec<EvaluatedRun> = Vec::new();
    for &kind in &cfg.models {
        for &seed in &cfg.seeds {
            runs.push(run_cross_time(&records, cfg.experiment.train_fraction, kind, &cfg.experiment, seed)?);
        }
    }
    let mut summary = format!("{:<6} {:>9} {:>10}\n", "model", "median F1", "median AUC");
    let mut bars = Vec::new();
    for &kind in &cfg.models {
        let of: Vec<&EvaluatedRun> = runs.iter().filter(|r| r.kind == kind).collect();
        let f1 = median(of.iter().map(|r| r.report.f1).collect());
        let auc = median(of.iter().map(|r| r.auc).collect());
        let _ = writeln!(summary, "{:<6} {f1:>9.4} {auc:>10.4}", kind.as_str());
        bars.push((kind.as_str().to_string(), f1));
    }
    let svg = chart.then(|| svg::bar_chart("Cross-time median F1 by model", &bars));
    emit(cfg, "cross-time", &cross_time_rows(&runs), &summary, svg)
}

pub fn patterns(cfg: &RunConfig, chart: bool) -> Result<(), CliError> {
    let records = prepare(cfg)?;
    let breakdowns = cfg
        .seeds
        .iter()
        .map(|&seed| run_pattern_breakdown(&records, &cfg.experiment, seed))
        .collect::<Result<Vec<PatternBreakdown>, _>>()?;
    let mut summary = format!("{:<11} {:>9}\n", "pattern", "median F1");
    let mut bars = Vec::new();
    for label in PatternLabel::ALL {
        let f1 = median(breakdowns.iter().filter_map(|b| b.f1(label)).collect());
        let _ = writeln!(summary, "{:<11} {f1:>9.4}", label.as_str());
        bars.push((label.as_str().to_string(), f1));
    }
    let svg = chart.then(|| svg::bar_chart("Median F1 by pattern", &bars));
    emit(cfg, "patterns", &pattern_rows(&breakdowns), &summary, svg)
}

pub fn sparsity(cfg: &RunConfig, chart: bool) -> Result<(), CliError> {
    let records = prepare(cfg)?;
    let result = run_sparsity_sweep(&records, &cfg.levels, &cfg.seeds, &cfg.experiment)?;
    let medians = result.median_f1();
    let mut summary = format!("{:<6} {:>9}\n", "level", "median F1");
    for (level, f1) in result.levels.iter().zip(&medians) {
        let _ = writeln!(summary, "{level:<6.2} {f1:>9.4}");
    }
    let points: Vec<(f64, f64)> = result.levels.iter().copied().zip(medians).collect();
    let svg = chart.then(|| svg::line_chart("Median F1 by training sparsity", "sparsity", &points));
    emit(cfg, "sparsity", &sparsity_rows(&result), &summary, svg)
}
