//! Adam, the adversarial / variational / joint training procedures,
//! training traces and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, DetectorState, CHECKPOINT_MAGIC, CHECKPOINT_TRAILER,
    CHECKPOINT_VERSION,
};
pub use config::{EpochStats, TrainConfig, TrainingTrace};
pub use train::{
    phase_loss_and_grad, phase_params, train_gan, train_joint, train_vae, train_with, with_phase_params, Phase,
    PhaseOutput, Procedure, StepAudit, Trained,
};
