//! Generator, discriminator, encoder and decoder MLPs and the adversarial,
//! variational and joint losses.

mod bundle;
mod losses;
mod mlp;
mod objective;

pub use bundle::{
    reparameterize, reparameterize_with, Architecture, EncoderOutput, FeatureLayout, Forward,
    ModelBundle, LOG_VAR_LIMIT, PROB_FLOOR,
};
pub use losses::{
    gan_loss, gan_loss_value, gaussian_kl, gaussian_kl_value, joint_loss, joint_loss_value,
    reconstruction_loss, vae_loss, vae_loss_value, GeneratorObjective, JointConfig,
};
pub use mlp::{HiddenActivation, Layer, Mlp, MlpSpec, OutputActivation};
pub use objective::{value_and_grad, FrozenBatch, Objective, ObjectiveValues};
