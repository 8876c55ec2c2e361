//! `flowsentry`: generate data, train, score and run the detection
//! experiments from the command line.

mod commands;
mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowsentry::evalkit::ModelKind;
use flowsentry::Error;

use config::RunConfig;

/// Process exit status with the diagnostic printed to stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const INTERNAL: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const WRITE: u8 = 3;
    pub const DATA: u8 = 4;
    pub const NUMERIC: u8 = 5;
    pub const CHECKPOINT: u8 = 6;

    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Self::USAGE, message)
    }

    pub fn write(path: &Path, e: std::io::Error) -> Self {
        Self::new(Self::WRITE, format!("cannot write {}: {e}", path.display()))
    }

    /// Any failure to load a checkpoint, including a missing file.
    pub fn checkpoint(e: Error) -> Self {
        Self::new(Self::CHECKPOINT, e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => Self::USAGE,
            Error::Schema { .. }
            | Error::Row { .. }
            | Error::Csv(_)
            | Error::Io { .. }
            | Error::MissingClass(_)
            | Error::Split(_)
            | Error::Calibration(_) => Self::DATA,
            Error::NonFinite { .. } => Self::NUMERIC,
            Error::Version { .. } | Error::Parse(_) => Self::CHECKPOINT,
            Error::Shape { .. } | Error::Contract(_) => Self::INTERNAL,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "flowsentry", version, about = "Suspicious-payment detection with a jointly trained GAN and VAE")]
struct Cli {
    /// TOML file with run settings; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed: training seed for `train`, generator seed for `gen-data`,
    /// single experiment seed when `--seeds` is absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving every output file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// More diagnostics on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a labeled synthetic PaySim-format CSV and a summary.
    GenData(GenDataArgs),
    /// Train a detector and write its checkpoint and loss trace.
    Train(TrainArgs),
    /// Score records with a trained checkpoint.
    Score(ScoreArgs),
    /// Run one of the evaluation protocols.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Print a JSON summary of a checkpoint.
    InspectCkpt(InspectArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long)]
    accounts: Option<usize>,
    #[arg(long)]
    steps: Option<u32>,
    #[arg(long)]
    fraud_rate: Option<f64>,
    #[arg(long)]
    laundering_rate: Option<f64>,
    /// Mean per-hour probability that a customer pays.
    #[arg(long)]
    activity: Option<f64>,
    /// Output CSV, relative to the output directory.
    #[arg(short, long, default_value = "data.csv")]
    output: PathBuf,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// PaySim-format CSV; synthetic data from the config when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Read at most this many rows.
    #[arg(long)]
    max_rows: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct TrainingArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Weight of the variational term in the joint objective.
    #[arg(long)]
    lambda: Option<f64>,
    /// Weight on discriminator evidence in the anomaly score.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Output directory (overrides --out-dir).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Decision threshold; calibrated on the input labels when absent.
    #[arg(long)]
    theta: Option<f64>,
    /// Scored CSV, relative to the output directory.
    #[arg(short, long, default_value = "scores.csv")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    ckpt: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Write an SVG chart next to the reports.
    #[arg(long)]
    svg: bool,
    /// Output directory (overrides --out-dir).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Train on the earlier period, test on the later one.
    CrossTime {
        #[command(flatten)]
        common: ExperimentArgs,
        /// Comma-separated model kinds.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
    },
    /// Per-pattern scores of the joint model.
    Patterns {
        #[command(flatten)]
        common: ExperimentArgs,
    },
    /// Joint model trained on progressively thinner training data.
    Sparsity {
        #[command(flatten)]
        common: ExperimentArgs,
        /// Comma-separated, strictly increasing levels in [0, 1).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.data {
            cfg.data.csv = Some(p.clone());
        }
        if let Some(n) = self.max_rows {
            cfg.data.max_rows = Some(n);
        }
    }
}

impl TrainingArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let train = &mut cfg.experiment.train;
        if let Some(v) = self.epochs {
            train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            train.batch_size = v;
        }
        if let Some(v) = self.lambda {
            train.lambda = v;
        }
        if let Some(v) = self.alpha {
            cfg.experiment.alpha = Some(v);
        }
    }
}

impl ExperimentArgs {
    fn apply(&self, cfg: &mut RunConfig, seed: Option<u64>) {
        self.data.apply(cfg);
        self.training.apply(cfg);
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        } else if let Some(s) = seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.output {
            cfg.out_dir = o.clone();
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.out_dir {
        cfg.out_dir = d;
    }
    match cli.command {
        Command::GenData(a) => {
            let synth = &mut cfg.synthetic;
            if let Some(v) = a.accounts {
                synth.n_accounts = v;
            }
            if let Some(v) = a.steps {
                synth.n_steps = v;
            }
            if let Some(v) = a.fraud_rate {
                synth.fraud_rate = v;
            }
            if let Some(v) = a.laundering_rate {
                synth.laundering_rate = v;
            }
            if let Some(v) = a.activity {
                synth.activity = v;
            }
            if let Some(s) = cli.seed {
                synth.seed = s;
            }
            commands::gen_data(&cfg, &a.output)
        }
        Command::Train(a) => {
            a.data.apply(&mut cfg);
            a.training.apply(&mut cfg);
            if let Some(m) = a.model {
                cfg.model = m;
            }
            if let Some(o) = a.output {
                cfg.out_dir = o;
            }
            commands::train(&cfg)
        }
        Command::Score(a) => {
            a.data.apply(&mut cfg);
            commands::score(&cfg, &a.ckpt, a.theta, &a.output)
        }
        Command::InspectCkpt(a) => commands::inspect(&a.ckpt),
        Command::Experiment(e) => match e {
            ExperimentCommand::CrossTime { common, models } => {
                common.apply(&mut cfg, cli.seed);
                if let Some(m) = models {
                    cfg.models = m;
                }
                commands::cross_time(&cfg, common.svg)
            }
            ExperimentCommand::Patterns { common } => {
                common.apply(&mut cfg, cli.seed);
                commands::patterns(&cfg, common.svg)
            }
            ExperimentCommand::Sparsity { common, levels } => {
                common.apply(&mut cfg, cli.seed);
                if let Some(l) = levels {
                    cfg.levels = l;
                }
                commands::sparsity(&cfg, common.svg)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
