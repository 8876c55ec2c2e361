use serde::{Deserialize, Serialize};

use super::mlp::{HiddenActivation, Mlp, MlpSpec, OutputActivation};
use crate::diffcore::{draw_standard_normal, DeterministicRng, NodeId, Tape, Tensor, LOG_FLOOR};
use crate::error::{Error, Result};

/// Discriminator outputs are kept inside `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = LOG_FLOOR;
/// Encoder log-variances are clamped to `[-LOG_VAR_LIMIT, LOG_VAR_LIMIT]`.
pub const LOG_VAR_LIMIT: f64 = 10.0;

/// Feature width plus the column range of the one-hot categorical block, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub width: usize,
    pub categorical: Option<(usize, usize)>,
}

impl FeatureLayout {
    pub fn continuous(width: usize) -> Self {
        Self {
            width,
            categorical: None,
        }
    }

    pub fn with_categorical(width: usize, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > width {
            return Err(Error::Config(format!(
                "categorical block {start}..{end} does not fit width {width}"
            )));
        }
        Ok(Self {
            width,
            categorical: Some((start, end)),
        })
    }

    /// Column ranges outside the categorical block.
    pub fn continuous_ranges(&self) -> Vec<(usize, usize)> {
        match self.categorical {
            None => vec![(0, self.width)],
            Some((s, e)) => [(0, s), (e, self.width)]
                .into_iter()
                .filter(|(a, b)| a < b)
                .collect(),
        }
    }
}

/// Hidden widths of the four networks and the latent dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            latent_dim: 8,
            generator_hidden: vec![64, 64],
            discriminator_hidden: vec![64, 32],
            encoder_hidden: vec![64],
            decoder_hidden: vec![64],
        }
    }
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut w = Vec::with_capacity(hidden.len() + 2);
    w.push(input);
    w.extend_from_slice(hidden);
    w.push(output);
    w
}

impl Architecture {
    pub fn specs(&self, layout: &FeatureLayout) -> Result<[MlpSpec; 4]> {
        let (dz, dx) = (self.latent_dim, layout.width);
        if dz == 0 {
            return Err(Error::Config("latent dimension must be positive".into()));
        }
        let leaky = HiddenActivation::LeakyRelu;
        Ok([
            MlpSpec::new(widths(dz, &self.generator_hidden, dx), leaky, OutputActivation::Identity)?,
            MlpSpec::new(widths(dx, &self.discriminator_hidden, 1), leaky, OutputActivation::Sigmoid)?,
            MlpSpec::new(widths(dx, &self.encoder_hidden, 2 * dz), leaky, OutputActivation::Identity)?,
            MlpSpec::new(widths(dz, &self.decoder_hidden, dx), leaky, OutputActivation::Identity)?,
        ])
    }
}

/// Generator, discriminator, encoder and decoder of the joint model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub encoder: Mlp,
    pub decoder: Mlp,
    layout: FeatureLayout,
    latent_dim: usize,
}

/// Output node of a network plus its parameter leaves (empty when frozen).
#[derive(Clone, Debug)]
pub struct Forward {
    pub output: NodeId,
    pub params: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct EncoderOutput {
    pub mu: NodeId,
    pub log_var: NodeId,
    pub params: Vec<NodeId>,
}

impl ModelBundle {
    pub fn new(arch: &Architecture, layout: FeatureLayout, rng: &mut DeterministicRng) -> Result<Self> {
        let [g, d, e, dec] = arch.specs(&layout)?;
        Ok(Self {
            generator: Mlp::init(g, rng),
            discriminator: Mlp::init(d, rng),
            encoder: Mlp::init(e, rng),
            decoder: Mlp::init(dec, rng),
            layout,
            latent_dim: arch.latent_dim,
        })
    }

    /// All-zero parameters everywhere.
    pub fn zeros(arch: &Architecture, layout: FeatureLayout) -> Result<Self> {
        let [g, d, e, dec] = arch.specs(&layout)?;
        Ok(Self {
            generator: Mlp::zeros(g),
            discriminator: Mlp::zeros(d),
            encoder: Mlp::zeros(e),
            decoder: Mlp::zeros(dec),
            layout,
            latent_dim: arch.latent_dim,
        })
    }

    pub fn from_parts(
        generator: Mlp,
        discriminator: Mlp,
        encoder: Mlp,
        decoder: Mlp,
        layout: FeatureLayout,
    ) -> Result<Self> {
        let dz = generator.spec().input_dim();
        let dx = layout.width;
        let ok = generator.spec().output_dim() == dx
            && discriminator.spec().input_dim() == dx
            && discriminator.spec().output_dim() == 1
            && encoder.spec().input_dim() == dx
            && encoder.spec().output_dim() == 2 * dz
            && decoder.spec().input_dim() == dz
            && decoder.spec().output_dim() == dx;
        if !ok {
            return Err(Error::contract("network dimensions are inconsistent"));
        }
        Ok(Self {
            generator,
            discriminator,
            encoder,
            decoder,
            layout,
            latent_dim: dz,
        })
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.layout.width
    }

    pub fn networks(&self) -> [&Mlp; 4] {
        [&self.generator, &self.discriminator, &self.encoder, &self.decoder]
    }

    /// Cloned parameters of G, D, encoder, decoder, in that order.
    pub fn params(&self) -> Vec<Tensor> {
        self.networks()
            .into_iter()
            .flat_map(|n| n.params().cloned())
            .collect()
    }

    /// Copy of `self` with parameters replaced (same order as [`ModelBundle::params`]).
    pub fn with_params(&self, params: &[Tensor]) -> Result<Self> {
        let mut out = self.clone();
        let mut it = params.iter();
        for net in [
            &mut out.generator,
            &mut out.discriminator,
            &mut out.encoder,
            &mut out.decoder,
        ] {
            for p in net.params_mut() {
                let src = it
                    .next()
                    .ok_or_else(|| Error::contract("too few parameter tensors"))?;
                if src.shape() != p.shape() {
                    return Err(Error::Shape {
                        op: "with_params",
                        lhs: p.shape().to_vec(),
                        rhs: src.shape().to_vec(),
                    });
                }
                *p = src.clone();
            }
        }
        if it.next().is_some() {
            return Err(Error::contract("too many parameter tensors"));
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.networks()
            .iter()
            .all(|n| n.params().all(Tensor::is_finite))
    }

    /// `G(z)`; the categorical block, if any, is emitted as softmax probabilities.
    pub fn generator_forward(&self, tape: &mut Tape, z: NodeId, trainable: bool) -> Result<Forward> {
        check_width(tape, z, self.latent_dim, "generator_forward")?;
        let (raw, params) = self.generator.forward(tape, z, trainable)?;
        let output = match self.layout.categorical {
            None => raw,
            Some((s, e)) => {
                let mut parts = Vec::with_capacity(3);
                if s > 0 {
                    parts.push(tape.slice_cols(raw, 0, s)?);
                }
                let block = tape.slice_cols(raw, s, e)?;
                let log_probs = tape.log_softmax(block)?;
                parts.push(tape.exp(log_probs)?);
                if e < self.layout.width {
                    parts.push(tape.slice_cols(raw, e, self.layout.width)?);
                }
                tape.concat(&parts)?
            }
        };
        Ok(Forward { output, params })
    }

    /// `D(x)`, clamped into `[PROB_FLOOR, 1 - PROB_FLOOR]`.
    pub fn discriminator_forward(&self, tape: &mut Tape, x: NodeId, trainable: bool) -> Result<Forward> {
        check_width(tape, x, self.layout.width, "discriminator_forward")?;
        let (p, params) = self.discriminator.forward(tape, x, trainable)?;
        let output = tape.clamp(p, PROB_FLOOR, 1.0 - PROB_FLOOR)?;
        Ok(Forward { output, params })
    }

    /// Posterior mean and clamped log-variance of `q(z|x)`.
    pub fn encoder_forward(&self, tape: &mut Tape, x: NodeId, trainable: bool) -> Result<EncoderOutput> {
        check_width(tape, x, self.layout.width, "encoder_forward")?;
        let (h, params) = self.encoder.forward(tape, x, trainable)?;
        let dz = self.latent_dim;
        let mu = tape.slice_cols(h, 0, dz)?;
        let raw = tape.slice_cols(h, dz, 2 * dz)?;
        let log_var = tape.clamp(raw, -LOG_VAR_LIMIT, LOG_VAR_LIMIT)?;
        Ok(EncoderOutput {
            mu,
            log_var,
            params,
        })
    }

    /// Decoder output; the categorical block holds unnormalized logits.
    pub fn decoder_forward(&self, tape: &mut Tape, z: NodeId, trainable: bool) -> Result<Forward> {
        check_width(tape, z, self.latent_dim, "decoder_forward")?;
        let (output, params) = self.decoder.forward(tape, z, trainable)?;
        Ok(Forward { output, params })
    }
}

fn check_width(tape: &Tape, x: NodeId, width: usize, op: &'static str) -> Result<()> {
    let t = tape.value(x);
    if t.shape().len() != 2 || t.cols() != width {
        return Err(Error::Shape {
            op,
            lhs: vec![width],
            rhs: t.shape().to_vec(),
        });
    }
    Ok(())
}

/// `z = mu + exp(log_var / 2) * eps` with a caller-supplied noise tensor.
pub fn reparameterize_with(tape: &mut Tape, mu: NodeId, log_var: NodeId, eps: &Tensor) -> Result<NodeId> {
    if tape.value(mu).shape() != tape.value(log_var).shape() || tape.value(mu).shape() != eps.shape() {
        return Err(Error::Shape {
            op: "reparameterize",
            lhs: tape.value(mu).shape().to_vec(),
            rhs: tape.value(log_var).shape().to_vec(),
        });
    }
    let half = tape.scale(log_var, 0.5)?;
    let sigma = tape.exp(half)?;
    let eps = tape.constant(eps.clone());
    let noise = tape.mul(sigma, eps)?;
    tape.add(mu, noise)
}

/// Draws `eps ~ N(0, I)` from `rng` and reparameterizes. The noise is returned
/// so the same draw can be replayed.
pub fn reparameterize(
    tape: &mut Tape,
    mu: NodeId,
    log_var: NodeId,
    rng: &mut DeterministicRng,
) -> Result<(NodeId, Tensor)> {
    let eps = draw_standard_normal(rng, tape.value(mu).shape());
    let z = reparameterize_with(tape, mu, log_var, &eps)?;
    Ok((z, eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_layout() -> FeatureLayout {
        FeatureLayout::with_categorical(6, 1, 4).unwrap()
    }

    #[test]
    fn zero_generator_with_identity_output_is_zero() {
        let arch = Architecture::default();
        let bundle = ModelBundle::zeros(&arch, FeatureLayout::continuous(3)).unwrap();
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::filled(&[2, 8], 0.7));
        let out = bundle.generator_forward(&mut tape, z, false).unwrap();
        assert!(tape.value(out.output).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generator_block_is_a_distribution() {
        let bundle = ModelBundle::new(&Architecture::default(), toy_layout(), &mut DeterministicRng::new(3)).unwrap();
        let mut tape = Tape::new();
        let z = tape.constant(draw_standard_normal(&mut DeterministicRng::new(4), &[8, 8]));
        let out = bundle.generator_forward(&mut tape, z, true).unwrap();
        let v = tape.value(out.output);
        assert_eq!(v.shape(), &[8, 6]);
        for r in 0..8 {
            let s: f64 = v.row(r)[1..4].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_discriminator_is_one_half() {
        let bundle = ModelBundle::zeros(&Architecture::default(), toy_layout()).unwrap();
        let mut tape = Tape::new();
        let x = tape.constant(draw_standard_normal(&mut DeterministicRng::new(1), &[8, 6]));
        let d = bundle.discriminator_forward(&mut tape, x, false).unwrap();
        assert_eq!(tape.value(d.output).shape(), &[8, 1]);
        assert!(tape.value(d.output).data().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn saturated_discriminator_is_clamped() {
        let mut bundle = ModelBundle::zeros(&Architecture::default(), toy_layout()).unwrap();
        let last = bundle.discriminator.layers_mut().last_mut().unwrap();
        last.bias.data_mut()[0] = 50.0;
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[2, 6]));
        let d = bundle.discriminator_forward(&mut tape, x, false).unwrap();
        let p = tape.value(d.output).data()[0];
        assert!(p < 1.0);
        let neg = tape.neg(d.output).unwrap();
        let one_minus = tape.add_scalar(neg, 1.0).unwrap();
        let l = tape.log(one_minus).unwrap();
        assert!(tape.value(l).is_finite());
    }

    #[test]
    fn zero_encoder_matches_prior() {
        let bundle = ModelBundle::zeros(&Architecture::default(), toy_layout()).unwrap();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::filled(&[8, 6], 3.0));
        let enc = bundle.encoder_forward(&mut tape, x, false).unwrap();
        assert_eq!(tape.value(enc.mu).shape(), &[8, 8]);
        assert_eq!(tape.value(enc.log_var).shape(), &[8, 8]);
        assert!(tape.value(enc.mu).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(enc.log_var).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn log_var_is_clamped() {
        let arch = Architecture {
            latent_dim: 1,
            ..Architecture::default()
        };
        let mut bundle = ModelBundle::zeros(&arch, FeatureLayout::continuous(2)).unwrap();
        bundle.encoder.layers_mut().last_mut().unwrap().bias.data_mut()[1] = 25.0;
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 2]));
        let enc = bundle.encoder_forward(&mut tape, x, false).unwrap();
        assert_eq!(tape.value(enc.log_var).item(), 10.0);
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let bundle = ModelBundle::zeros(&Architecture::default(), toy_layout()).unwrap();
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::zeros(&[2, 5]));
        assert!(matches!(bundle.generator_forward(&mut tape, z, false), Err(Error::Shape { .. })));
        assert!(matches!(bundle.discriminator_forward(&mut tape, z, false), Err(Error::Shape { .. })));
    }

    #[test]
    fn reparameterize_arithmetic() {
        let mut tape = Tape::new();
        let mu = tape.constant(Tensor::from_rows(&[[1.0, 2.0]]).unwrap());
        let lv = tape.constant(Tensor::from_rows(&[[0.0, 0.0]]).unwrap());
        let eps = Tensor::from_rows(&[[0.5, -0.5]]).unwrap();
        let z = reparameterize_with(&mut tape, mu, lv, &eps).unwrap();
        assert_eq!(tape.value(z).data(), &[1.5, 1.5]);
    }

    #[test]
    fn clamped_variance_keeps_z_near_mu() {
        let mut tape = Tape::new();
        let mu = tape.constant(Tensor::from_rows(&[[0.3, -2.0]]).unwrap());
        let lv = tape.constant(Tensor::filled(&[1, 2], -LOG_VAR_LIMIT));
        let eps = Tensor::from_rows(&[[1.0, -1.0]]).unwrap();
        let z = reparameterize_with(&mut tape, mu, lv, &eps).unwrap();
        for (zv, m) in tape.value(z).data().iter().zip([0.3, -2.0]) {
            assert!((zv - m).abs() < 0.007);
        }
    }

    #[test]
    fn reparameterized_moments() {
        let n = 100_000;
        let mut tape = Tape::new();
        let mu = tape.constant(Tensor::zeros(&[n, 1]));
        let lv = tape.constant(Tensor::zeros(&[n, 1]));
        let (z, eps) = reparameterize(&mut tape, mu, lv, &mut DeterministicRng::new(11)).unwrap();
        assert_eq!(tape.value(z), &eps);
        let mean = eps.data().iter().sum::<f64>() / n as f64;
        let var = eps.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((0.97..=1.03).contains(&var), "{var}");
    }

    #[test]
    fn params_round_trip() {
        let bundle = ModelBundle::new(&Architecture::default(), toy_layout(), &mut DeterministicRng::new(9)).unwrap();
        let params = bundle.params();
        assert_eq!(bundle.with_params(&params).unwrap(), bundle);
        assert!(bundle.with_params(&params[1..]).is_err());
    }
}
