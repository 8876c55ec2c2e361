mod common;

use flowsentry::detect::{reconstruction_errors, score_batch, ScoreWeights};
use flowsentry::diffcore::DeterministicRng;
use flowsentry::evalkit::{
    run_cross_time, run_pattern_breakdown, run_sparsity_sweep, ExperimentConfig, ModelKind,
};
use flowsentry::payflow::{
    encode_all, fit_stats, generate_synthetic, label_counts, PatternLabel, SynthConfig, CONTINUOUS_FEATURES,
};
use flowsentry::trainloop::{
    load_checkpoint, save_checkpoint, train_gan, train_joint, train_vae, Checkpoint, TrainConfig,
    CHECKPOINT_VERSION,
};
use flowsentry::Error;

fn quick_experiment() -> ExperimentConfig {
    ExperimentConfig {
        train: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

fn small_data(seed: u64) -> Vec<flowsentry::payflow::TransactionRecord> {
    generate_synthetic(&SynthConfig {
        n_accounts: 250,
        n_steps: 80,
        fraud_rate: 0.02,
        laundering_rate: 0.01,
        seed,
        activity: 0.1,
    })
    .unwrap()
}

#[test]
fn fraud_share_stays_within_binomial_bounds() {
    for seed in 0..10 {
        let records = generate_synthetic(&SynthConfig {
            seed,
            ..common::detection_data_config()
        })
        .unwrap();
        let n = records.len();
        assert!((19_000..=21_000).contains(&n), "seed {seed}: {n} records");
        let [_, fraud, laundering] = label_counts(&records);
        assert!((160..=240).contains(&fraud), "seed {seed}: {fraud} fraud rows");
        assert!((60..=140).contains(&laundering), "seed {seed}: {laundering} laundering rows");
    }
}

#[test]
fn encoded_training_features_are_standardized() {
    let records = small_data(1);
    let stats = fit_stats(&records).unwrap();
    let x = encode_all(&records, &stats).unwrap();
    let n = x.rows() as f64;
    // continuous columns: amount and the four balances
    for col in [0, 6, 7, 8, 9] {
        let v: Vec<f64> = (0..x.rows()).map(|r| x.data()[r * x.cols() + col]).collect();
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9, "column {col} mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-9, "column {col} std {}", var.sqrt());
    }
    assert_eq!(CONTINUOUS_FEATURES, 5);
}

#[test]
fn identical_seeds_give_identical_traces() {
    let bundle = common::small_bundle(1, 2);
    let mut rng = DeterministicRng::new(2);
    let x = common::gaussian_rows(&mut rng, 64, &[1.0, 0.0]);
    let config = TrainConfig {
        epochs: 4,
        batch_size: 16,
        ..TrainConfig::default()
    };
    for train in [train_gan, train_vae, train_joint] {
        let a = train(&bundle, &x, &config).unwrap();
        let b = train(&bundle, &x, &config).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.bundle, b.bundle);
        assert_eq!(a.rng_state, b.rng_state);
    }
}

#[test]
fn variational_loss_falls_over_training() {
    let bundle = common::small_bundle(4, 2);
    let mut rng = DeterministicRng::new(6);
    let x = common::gaussian_rows(&mut rng, 256, &[2.0, -1.0]);
    let config = TrainConfig {
        epochs: 100,
        batch_size: 32,
        seed: 3,
        ..TrainConfig::default()
    };
    let trace = train_vae(&bundle, &x, &config).unwrap().trace;
    let first = trace.epochs[0].l_vae.unwrap();
    let last = trace.last().unwrap().l_vae.unwrap();
    assert!(last < first, "L_VAE {first} -> {last}");
}

#[test]
fn joint_training_improves_reconstruction() {
    let bundle = common::small_bundle(4, 2);
    let mut rng = DeterministicRng::new(7);
    let x = common::gaussian_rows(&mut rng, 256, &[2.0, -1.0]);
    let config = TrainConfig {
        epochs: 60,
        batch_size: 32,
        lambda: 1.0,
        seed: 5,
        ..TrainConfig::default()
    };
    let trained = train_joint(&bundle, &x, &config).unwrap();
    let vae: Vec<f64> = trained.trace.epochs.iter().map(|e| e.l_vae.unwrap()).collect();
    let window = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (head, tail) = (window(&vae[..10]), window(&vae[vae.len() - 10..]));
    assert!(tail < head, "windowed L_VAE {head} -> {tail}");
    let mean_err = |b| {
        let e = reconstruction_errors(b, &x).unwrap();
        e.iter().sum::<f64>() / e.len() as f64
    };
    let (before, after) = (mean_err(&bundle), mean_err(&trained.bundle));
    assert!(after < before, "reconstruction error {before} -> {after}");
}

#[test]
fn checkpoint_files_round_trip_and_guard_the_version() {
    let records = small_data(2);
    let stats = fit_stats(&records).unwrap();
    let x = encode_all(&records, &stats).unwrap();
    let mut init = DeterministicRng::new(12);
    let bundle = flowsentry::nets::ModelBundle::new(
        &flowsentry::nets::Architecture::default(),
        flowsentry::payflow::feature_layout(),
        &mut init,
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let trained = train_joint(&bundle, &x, &config).unwrap();
    let ckpt = Checkpoint {
        bundle: trained.bundle,
        stats,
        config,
        detector: None,
        rng_seed: 42,
        rng_state: trained.rng_state,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    save_checkpoint(&ckpt, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, ckpt);
    let w = ScoreWeights::default();
    assert_eq!(score_batch(&ckpt.bundle, &w, &x).unwrap(), score_batch(&loaded.bundle, &w, &x).unwrap());

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[8..12].copy_from_slice(&999u32.to_le_bytes());
    std::fs::write(&path, &bytes).unwrap();
    match load_checkpoint(&path) {
        Err(Error::Version { found, supported }) => assert_eq!((found, supported), (999, CHECKPOINT_VERSION)),
        other => panic!("expected a version error, got {other:?}"),
    }
}

#[test]
fn zero_sparsity_sweep_matches_the_cross_time_run() {
    let records = small_data(3);
    let config = quick_experiment();
    let sweep = run_sparsity_sweep(&records, &[0.0], &[9], &config).unwrap();
    let run = run_cross_time(&records, config.train_fraction, ModelKind::Joint, &config, 9).unwrap();
    assert_eq!(sweep.levels, vec![0.0]);
    assert_eq!(sweep.points[0].report, run.report);
    assert_eq!(sweep.points[0].auc, run.auc);
}

#[test]
fn sweep_levels_must_increase() {
    let records = small_data(3);
    let err = run_sparsity_sweep(&records, &[0.3, 0.1], &[1], &quick_experiment()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn pattern_breakdown_is_deterministic_and_needs_every_class() {
    let records = generate_synthetic(&SynthConfig {
        n_accounts: 250,
        n_steps: 100,
        fraud_rate: 0.02,
        laundering_rate: 0.03,
        seed: 4,
        activity: 0.1,
    })
    .unwrap();
    let config = quick_experiment();
    let a = run_pattern_breakdown(&records, &config, 2).unwrap();
    let b = run_pattern_breakdown(&records, &config, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.entries.len(), 3);

    let no_laundering: Vec<_> = records.into_iter().filter(|r| r.label != PatternLabel::Laundering).collect();
    match run_pattern_breakdown(&no_laundering, &config, 2) {
        Err(Error::MissingClass(msg)) => assert!(msg.contains("LAUNDERING"), "{msg}"),
        other => panic!("expected a missing-class error, got {other:?}"),
    }
}
