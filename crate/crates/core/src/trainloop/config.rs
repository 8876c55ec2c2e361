use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::{GeneratorObjective, JointConfig};

/// Hyperparameters shared by the three training procedures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_d: f64,
    pub lr_g: f64,
    pub lr_vae: f64,
    /// Weight of the variational term in the joint objective.
    pub lambda: f64,
    pub d_steps_per_g_step: usize,
    pub seed: u64,
    pub generator_objective: GeneratorObjective,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 128,
            lr_d: 2e-4,
            lr_g: 2e-4,
            lr_vae: 1e-3,
            lambda: 0.1,
            d_steps_per_g_step: 1,
            seed: 42,
            generator_objective: GeneratorObjective::NonSaturating,
            beta1: 0.5,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.d_steps_per_g_step == 0 {
            return Err(Error::Config("d_steps_per_g_step must be positive".into()));
        }
        for (name, lr) in [("lr_d", self.lr_d), ("lr_g", self.lr_g), ("lr_vae", self.lr_vae)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {lr}")));
            }
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Config("adam_eps must be positive".into()));
        }
        JointConfig::new(self.lambda, self.generator_objective)?;
        Ok(())
    }

    pub fn joint(&self) -> JointConfig {
        JointConfig {
            lambda: self.lambda,
            generator_objective: self.generator_objective,
        }
    }
}

/// Epoch means of the quantities logged during training. Columns that the
/// procedure does not touch are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub l_gan: Option<f64>,
    pub l_vae: Option<f64>,
    pub l_joint: Option<f64>,
    pub d_real_mean: Option<f64>,
    pub d_fake_mean: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochStats>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "l_gan", "l_vae", "l_joint", "d_real_mean", "d_fake_mean"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                cell(e.l_gan),
                cell(e.l_vae),
                cell(e.l_joint),
                cell(e.d_real_mean),
                cell(e.d_fake_mean),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { lambda: -1.0, ..Default::default() },
            TrainConfig { lr_g: 0.0, ..Default::default() },
            TrainConfig { d_steps_per_g_step: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn trace_csv_leaves_missing_cells_empty() {
        let trace = TrainingTrace {
            epochs: vec![EpochStats {
                epoch: 1,
                l_gan: Some(-1.5),
                l_vae: None,
                l_joint: None,
                d_real_mean: Some(0.5),
                d_fake_mean: Some(0.25),
            }],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "epoch,l_gan,l_vae,l_joint,d_real_mean,d_fake_mean\n1,-1.5,,,0.5,0.25\n"
        );
    }
}
