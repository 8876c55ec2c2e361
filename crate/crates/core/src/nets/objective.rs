use super::bundle::{reparameterize_with, ModelBundle};
use super::losses::{gan_loss, joint_loss, vae_loss, JointConfig};
use crate::diffcore::{Tape, Tensor};
use crate::error::Result;

/// A batch with all randomness fixed: real features, generator noise and the
/// reparameterization noise.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenBatch {
    pub real: Tensor,
    pub noise: Tensor,
    pub eps: Tensor,
}

/// Which of the three objectives to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    Gan,
    Vae,
    Joint(JointConfig),
}

/// Scalar values recorded while evaluating an objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValues {
    pub gan: Option<f64>,
    pub vae: Option<f64>,
    pub total: f64,
}

/// Evaluates `objective` on a frozen batch and differentiates it with respect
/// to every parameter of the bundle, in [`ModelBundle::params`] order.
/// Networks that do not enter the objective get zero gradients.
pub fn value_and_grad(
    bundle: &ModelBundle,
    batch: &FrozenBatch,
    objective: Objective,
) -> Result<(ObjectiveValues, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let x = tape.constant(batch.real.clone());

    let mut gen_params = Vec::new();
    let mut disc_params = Vec::new();
    let mut enc_params = Vec::new();
    let mut dec_params = Vec::new();

    let wants_gan = !matches!(objective, Objective::Vae);
    let wants_vae = !matches!(objective, Objective::Gan);

    let gan = if wants_gan {
        let z = tape.constant(batch.noise.clone());
        let fake = bundle.generator_forward(&mut tape, z, true)?;
        gen_params = fake.params;
        let d_real = bundle.discriminator_forward(&mut tape, x, true)?;
        disc_params = d_real.params;
        // second pass shares the same parameter leaves through a fresh copy;
        // gradients of both copies are summed below
        let d_fake = bundle.discriminator_forward(&mut tape, fake.output, true)?;
        disc_params.extend(d_fake.params);
        Some(gan_loss(&mut tape, d_real.output, d_fake.output)?)
    } else {
        None
    };

    let vae = if wants_vae {
        let enc = bundle.encoder_forward(&mut tape, x, true)?;
        enc_params = enc.params;
        let z = reparameterize_with(&mut tape, enc.mu, enc.log_var, &batch.eps)?;
        let dec = bundle.decoder_forward(&mut tape, z, true)?;
        dec_params = dec.params;
        Some(vae_loss(&mut tape, x, dec.output, enc.mu, enc.log_var, bundle.layout())?)
    } else {
        None
    };

    let root = match (objective, gan, vae) {
        (Objective::Joint(cfg), Some(g), Some(v)) => joint_loss(&mut tape, g, v, &cfg)?,
        (_, Some(g), None) => g,
        (_, None, Some(v)) => v,
        _ => unreachable!("objective always has at least one term"),
    };
    let grads = tape.backward(root)?;

    let mut out = Vec::new();
    let nets = bundle.networks();
    for (net, ids) in nets.iter().zip([&gen_params, &disc_params, &enc_params, &dec_params]) {
        let n = net.param_tensors();
        if ids.is_empty() {
            out.extend(net.params().map(|p| Tensor::zeros(p.shape())));
            continue;
        }
        let mut g = grads.collect(&ids[..n])?;
        for chunk in ids[n..].chunks(n) {
            for (acc, extra) in g.iter_mut().zip(grads.collect(chunk)?) {
                acc.add_assign(&extra);
            }
        }
        out.extend(g);
    }

    let values = ObjectiveValues {
        gan: gan.map(|g| tape.value(g).item()),
        vae: vae.map(|v| tape.value(v).item()),
        total: tape.value(root).item(),
    };
    Ok((values, out))
}
