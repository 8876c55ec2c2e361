//! Adversarial, variational and joint objectives.
//!
//! Tape versions build differentiable scalars; the `*_value` helpers evaluate
//! the same expressions on plain numbers by running them through a scratch
//! tape, so both paths share one implementation.

use serde::{Deserialize, Serialize};

use super::bundle::FeatureLayout;
use crate::diffcore::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};

/// How the generator is updated against the discriminator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorObjective {
    /// Minimize `log(1 - D(G(z)))`, the literal adversarial objective.
    Minimax,
    /// Maximize `log D(G(z))`.
    #[default]
    NonSaturating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub lambda: f64,
    pub generator_objective: GeneratorObjective,
}

impl Default for JointConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            generator_objective: GeneratorObjective::NonSaturating,
        }
    }
}

impl JointConfig {
    pub fn new(lambda: f64, generator_objective: GeneratorObjective) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            generator_objective,
        })
    }
}

/// `mean(log D(x)) + mean(log(1 - D(G(z))))`.
pub fn gan_loss(tape: &mut Tape, d_real: NodeId, d_fake: NodeId) -> Result<NodeId> {
    let log_real = tape.log(d_real)?;
    let real_term = tape.mean(log_real)?;
    let neg = tape.neg(d_fake)?;
    let one_minus = tape.add_scalar(neg, 1.0)?;
    let log_fake = tape.log(one_minus)?;
    let fake_term = tape.mean(log_fake)?;
    tape.add(real_term, fake_term)
}

/// Batch mean of `KL(N(mu, exp(log_var)) || N(0, I))`.
pub fn gaussian_kl(tape: &mut Tape, mu: NodeId, log_var: NodeId) -> Result<NodeId> {
    let (mv, lv) = (tape.value(mu), tape.value(log_var));
    if mv.shape() != lv.shape() {
        return Err(Error::Shape {
            op: "gaussian_kl",
            lhs: mv.shape().to_vec(),
            rhs: lv.shape().to_vec(),
        });
    }
    let batch = mv.rows() as f64;
    let one_plus = tape.add_scalar(log_var, 1.0)?;
    let mu_sq = tape.square(mu)?;
    let var = tape.exp(log_var)?;
    let t = tape.sub(one_plus, mu_sq)?;
    let t = tape.sub(t, var)?;
    let total = tape.sum(t)?;
    tape.scale(total, -0.5 / batch)
}

fn gather_cols(tape: &mut Tape, x: NodeId, ranges: &[(usize, usize)], width: usize) -> Result<NodeId> {
    if ranges == [(0, width)] {
        return Ok(x);
    }
    let parts = ranges
        .iter()
        .map(|&(s, e)| tape.slice_cols(x, s, e))
        .collect::<Result<Vec<_>>>()?;
    if parts.len() == 1 {
        Ok(parts[0])
    } else {
        tape.concat(&parts)
    }
}

/// Negative log-likelihood of `x` under the decoder output, batch-averaged:
/// half squared error on continuous columns plus cross-entropy of the one-hot
/// block against the softmax of its logits.
pub fn reconstruction_loss(tape: &mut Tape, x: NodeId, x_hat: NodeId, layout: &FeatureLayout) -> Result<NodeId> {
    let (xv, hv) = (tape.value(x), tape.value(x_hat));
    if xv.shape() != hv.shape() || xv.cols() != layout.width {
        return Err(Error::Shape {
            op: "reconstruction_loss",
            lhs: xv.shape().to_vec(),
            rhs: hv.shape().to_vec(),
        });
    }
    let batch = xv.rows() as f64;
    let ranges = layout.continuous_ranges();
    let mut total = None;
    if !ranges.is_empty() {
        let xc = gather_cols(tape, x, &ranges, layout.width)?;
        let hc = gather_cols(tape, x_hat, &ranges, layout.width)?;
        let diff = tape.sub(hc, xc)?;
        let sq = tape.square(diff)?;
        let s = tape.sum(sq)?;
        total = Some(tape.scale(s, 0.5 / batch)?);
    }
    if let Some((s, e)) = layout.categorical {
        let logits = tape.slice_cols(x_hat, s, e)?;
        let log_probs = tape.log_softmax(logits)?;
        let target = tape.slice_cols(x, s, e)?;
        let picked = tape.mul(target, log_probs)?;
        let ce = tape.sum(picked)?;
        let ce = tape.scale(ce, -1.0 / batch)?;
        total = Some(match total {
            Some(t) => tape.add(t, ce)?,
            None => ce,
        });
    }
    total.ok_or_else(|| Error::contract("layout has no columns"))
}

/// Negative ELBO up to the Gaussian normalizing constant.
pub fn vae_loss(
    tape: &mut Tape,
    x: NodeId,
    x_hat: NodeId,
    mu: NodeId,
    log_var: NodeId,
    layout: &FeatureLayout,
) -> Result<NodeId> {
    let recon = reconstruction_loss(tape, x, x_hat, layout)?;
    let kl = gaussian_kl(tape, mu, log_var)?;
    tape.add(recon, kl)
}

/// `gan + lambda * vae`.
pub fn joint_loss(tape: &mut Tape, gan: NodeId, vae: NodeId, config: &JointConfig) -> Result<NodeId> {
    let weighted = tape.scale(vae, config.lambda)?;
    tape.add(gan, weighted)
}

pub fn gan_loss_value(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::contract("gan_loss needs non-empty batches"));
    }
    let mut tape = Tape::new();
    let r = tape.constant(Tensor::vector(d_real.to_vec())?);
    let f = tape.constant(Tensor::vector(d_fake.to_vec())?);
    let l = gan_loss(&mut tape, r, f)?;
    Ok(tape.value(l).item())
}

pub fn gaussian_kl_value(mu: &Tensor, log_var: &Tensor) -> Result<f64> {
    let mut tape = Tape::new();
    let m = tape.constant(mu.clone());
    let l = tape.constant(log_var.clone());
    let kl = gaussian_kl(&mut tape, m, l)?;
    Ok(tape.value(kl).item())
}

pub fn vae_loss_value(
    x: &Tensor,
    x_hat: &Tensor,
    mu: &Tensor,
    log_var: &Tensor,
    layout: &FeatureLayout,
) -> Result<f64> {
    let mut tape = Tape::new();
    let nodes = [x, x_hat, mu, log_var].map(|t| tape.constant(t.clone()));
    let l = vae_loss(&mut tape, nodes[0], nodes[1], nodes[2], nodes[3], layout)?;
    Ok(tape.value(l).item())
}

pub fn joint_loss_value(gan: f64, vae: f64, config: &JointConfig) -> f64 {
    gan + config.lambda * vae
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gan_loss_at_equilibrium() {
        let v = gan_loss_value(&[0.5], &[0.5]).unwrap();
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!((v + 1.3863).abs() < 1e-4);
    }

    #[test]
    fn gan_loss_perfect_discriminator() {
        let v = gan_loss_value(&[1.0 - 1e-12], &[1e-12]).unwrap();
        assert!(v.abs() < 1e-11);
    }

    #[test]
    fn gan_loss_small_batch() {
        let v = gan_loss_value(&[0.9, 0.8], &[0.1, 0.3]).unwrap();
        // mean(ln 0.9, ln 0.8) + mean(ln 0.9, ln 0.7), evaluated independently
        assert!((v - (-0.395_269_763_284_297_4)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn gan_loss_rejects_empty() {
        assert!(gan_loss_value(&[], &[0.5]).is_err());
    }

    #[test]
    fn kl_closed_form_points() {
        let z = Tensor::zeros(&[1, 1]);
        assert_eq!(gaussian_kl_value(&z, &z).unwrap(), 0.0);
        let one = Tensor::filled(&[1, 1], 1.0);
        assert!((gaussian_kl_value(&one, &z).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_is_a_batch_mean() {
        let mu = Tensor::from_rows(&[[1.0], [0.0]]).unwrap();
        let lv = Tensor::zeros(&[2, 1]);
        assert!((gaussian_kl_value(&mu, &lv).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn vae_loss_perfect_reconstruction_at_prior() {
        let layout = FeatureLayout::continuous(3);
        let x = Tensor::from_rows(&[[0.3, -1.0, 2.0]]).unwrap();
        let z = Tensor::zeros(&[1, 2]);
        assert_eq!(vae_loss_value(&x, &x, &z, &z, &layout).unwrap(), 0.0);
    }

    #[test]
    fn vae_loss_half_squared_error() {
        let layout = FeatureLayout::continuous(2);
        let x = Tensor::from_rows(&[[1.0, 0.0]]).unwrap();
        let xh = Tensor::zeros(&[1, 2]);
        let z = Tensor::zeros(&[1, 2]);
        assert_eq!(vae_loss_value(&x, &xh, &z, &z, &layout).unwrap(), 0.5);
    }

    #[test]
    fn categorical_block_uses_cross_entropy() {
        let layout = FeatureLayout::with_categorical(3, 1, 3).unwrap();
        let x = Tensor::from_rows(&[[0.0, 1.0, 0.0]]).unwrap();
        let xh = Tensor::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        let z = Tensor::zeros(&[1, 1]);
        let v = vae_loss_value(&x, &xh, &z, &z, &layout).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn vae_loss_shape_mismatch() {
        let layout = FeatureLayout::continuous(2);
        let z = Tensor::zeros(&[1, 2]);
        let err = vae_loss_value(&Tensor::zeros(&[1, 2]), &Tensor::zeros(&[2, 2]), &z, &z, &layout);
        assert!(matches!(err, Err(Error::Shape { .. })));
    }

    #[test]
    fn joint_weighting() {
        let c = |l| JointConfig::new(l, GeneratorObjective::NonSaturating).unwrap();
        assert_eq!(joint_loss_value(-1.3863, 0.7, &c(0.0)), -1.3863);
        assert!((joint_loss_value(-1.3863, 0.5, &c(2.0)) + 0.3863).abs() < 1e-12);
        assert_eq!(joint_loss_value(-1.3863, 0.0, &c(1.0)), -1.3863);
        assert!(JointConfig::new(-0.1, GeneratorObjective::Minimax).is_err());
    }
}
