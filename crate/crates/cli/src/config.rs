use std::path::{Path, PathBuf};

use flowsentry::evalkit::{ExperimentConfig, ModelKind};
use flowsentry::payflow::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Where records come from: a PaySim-format CSV, or the synthetic generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSource {
    pub csv: Option<PathBuf>,
    /// Read at most this many rows of the CSV.
    pub max_rows: Option<usize>,
}

/// Every setting a command needs. Values come from the config file first,
/// then command-line flags override them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Training seed of `train`. `--seed` also sets `synthetic.seed` for
    /// `gen-data` and the experiment seeds when `--seeds` is absent.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub model: ModelKind,
    /// Seeds of the experiment runners.
    pub seeds: Vec<u64>,
    /// Sparsity levels of the sweep.
    pub levels: Vec<f64>,
    /// Models compared by the cross-time experiment.
    pub models: Vec<ModelKind>,
    pub data: DataSource,
    pub synthetic: SynthConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("."),
            model: ModelKind::Joint,
            seeds: vec![1, 2, 3, 4, 5],
            levels: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            models: ModelKind::ALL.to_vec(),
            data: DataSource::default(),
            synthetic: SynthConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.synthetic.validate().map_err(CliError::from)?;
        self.experiment.validate().map_err(CliError::from)?;
        if self.seeds.is_empty() {
            return Err(CliError::usage("at least one seed is required"));
        }
        Ok(())
    }

    /// Writes the resolved configuration as `<name>.config.toml` under the
    /// output directory; passing it back with `--config` reruns the command.
    pub fn echo(&self, name: &str) -> Result<PathBuf, CliError> {
        let text = toml::to_string_pretty(self).map_err(|e| CliError::usage(format!("cannot encode config: {e}")))?;
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::write(&self.out_dir, e))?;
        let path = self.out_dir.join(format!("{name}.config.toml"));
        std::fs::write(&path, text).map_err(|e| CliError::write(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_a_toml_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 3\n[experiment.train]\nepochs = 5\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.experiment.train.epochs, 5);
        assert_eq!(cfg.experiment.train.batch_size, 128);
        assert_eq!(cfg.models.len(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 3\n").is_err());
    }
}
