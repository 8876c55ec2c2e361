use super::adam::{adam_step, AdamState};
use super::config::{EpochStats, TrainConfig, TrainingTrace};
use crate::diffcore::{draw_standard_normal, DeterministicRng, NodeId, RngState, Tape, Tensor};
use crate::error::{Error, Result};
use crate::nets::{gan_loss, reparameterize_with, vae_loss, FrozenBatch, GeneratorObjective, ModelBundle};

/// Stream tag for the reparameterization noise, kept apart from the main
/// stream so adding VAE steps never shifts the adversarial draws.
const VAE_STREAM: u64 = 0x0056_4145;

/// One optimizer step within a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Ascent on the adversarial objective for D.
    Discriminator,
    /// Generator step, plus the weighted variational term on `G(z)` when
    /// running jointly.
    Generator,
    /// Descent on the (weighted) variational objective for encoder+decoder.
    Vae,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Discriminator => "discriminator",
            Phase::Generator => "generator",
            Phase::Vae => "vae",
        }
    }
}

/// Which of the three procedures is running.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Procedure {
    Gan,
    Vae,
    Joint,
}

/// Loss of one phase and its gradient with respect to the phase's
/// parameters: D for [`Phase::Discriminator`], G for [`Phase::Generator`],
/// encoder then decoder for [`Phase::Vae`].
#[derive(Clone, Debug)]
pub struct PhaseOutput {
    pub loss: f64,
    pub grads: Vec<Tensor>,
    pub gan: Option<f64>,
    pub vae: Option<f64>,
    pub d_real_mean: Option<f64>,
    pub d_fake_mean: Option<f64>,
}

/// Parameters of the networks updated in `phase`, in gradient order.
pub fn phase_params(bundle: &ModelBundle, phase: Phase) -> Vec<Tensor> {
    match phase {
        Phase::Discriminator => bundle.discriminator.params().cloned().collect(),
        Phase::Generator => bundle.generator.params().cloned().collect(),
        Phase::Vae => bundle
            .encoder
            .params()
            .chain(bundle.decoder.params())
            .cloned()
            .collect(),
    }
}

/// Copy of `bundle` with the parameters of `phase` replaced.
pub fn with_phase_params(bundle: &ModelBundle, phase: Phase, params: &[Tensor]) -> Result<ModelBundle> {
    let mut all = bundle.params();
    let g = bundle.generator.param_tensors();
    let d = bundle.discriminator.param_tensors();
    let e = bundle.encoder.param_tensors();
    let dec = bundle.decoder.param_tensors();
    let range = match phase {
        Phase::Generator => 0..g,
        Phase::Discriminator => g..g + d,
        Phase::Vae => g + d..g + d + e + dec,
    };
    if range.len() != params.len() {
        return Err(Error::contract("wrong number of phase parameters"));
    }
    all[range].clone_from_slice(params);
    bundle.with_params(&all)
}

fn mean_of(tape: &Tape, id: NodeId) -> f64 {
    let d = tape.value(id).data();
    d.iter().sum::<f64>() / d.len() as f64
}

fn sum_copies(grads: &crate::diffcore::GradientMap, ids: &[NodeId], n: usize) -> Result<Vec<Tensor>> {
    let mut g = grads.collect(&ids[..n])?;
    for chunk in ids[n..].chunks(n) {
        for (acc, extra) in g.iter_mut().zip(grads.collect(chunk)?) {
            acc.add_assign(&extra);
        }
    }
    Ok(g)
}

/// Builds the loss of `phase` on a frozen batch and differentiates it.
/// `lambda` weights the variational term (generator and VAE phases).
pub fn phase_loss_and_grad(
    bundle: &ModelBundle,
    batch: &FrozenBatch,
    phase: Phase,
    objective: GeneratorObjective,
    lambda: f64,
) -> Result<PhaseOutput> {
    let mut tape = Tape::new();
    let x = tape.constant(batch.real.clone());
    match phase {
        Phase::Discriminator => {
            let z = tape.constant(batch.noise.clone());
            let fake = bundle.generator_forward(&mut tape, z, false)?;
            let real = bundle.discriminator_forward(&mut tape, x, true)?;
            let faked = bundle.discriminator_forward(&mut tape, fake.output, true)?;
            let gan = gan_loss(&mut tape, real.output, faked.output)?;
            let loss = tape.neg(gan)?;
            let grads = tape.backward(loss)?;
            let mut ids = real.params;
            ids.extend(faked.params);
            Ok(PhaseOutput {
                loss: tape.value(loss).item(),
                grads: sum_copies(&grads, &ids, bundle.discriminator.param_tensors())?,
                gan: Some(tape.value(gan).item()),
                vae: None,
                d_real_mean: Some(mean_of(&tape, real.output)),
                d_fake_mean: Some(mean_of(&tape, faked.output)),
            })
        }
        Phase::Generator => {
            let z = tape.constant(batch.noise.clone());
            let fake = bundle.generator_forward(&mut tape, z, true)?;
            let d_fake = bundle.discriminator_forward(&mut tape, fake.output, false)?;
            let adv = match objective {
                GeneratorObjective::NonSaturating => {
                    let l = tape.log(d_fake.output)?;
                    let m = tape.mean(l)?;
                    tape.neg(m)?
                }
                GeneratorObjective::Minimax => {
                    let n = tape.neg(d_fake.output)?;
                    let one_minus = tape.add_scalar(n, 1.0)?;
                    let l = tape.log(one_minus)?;
                    tape.mean(l)?
                }
            };
            let (loss, vae) = if lambda > 0.0 {
                let enc = bundle.encoder_forward(&mut tape, fake.output, false)?;
                let zz = reparameterize_with(&mut tape, enc.mu, enc.log_var, &batch.eps)?;
                let dec = bundle.decoder_forward(&mut tape, zz, false)?;
                let v = vae_loss(&mut tape, fake.output, dec.output, enc.mu, enc.log_var, bundle.layout())?;
                let w = tape.scale(v, lambda)?;
                (tape.add(adv, w)?, Some(v))
            } else {
                (adv, None)
            };
            let grads = tape.backward(loss)?;
            Ok(PhaseOutput {
                loss: tape.value(loss).item(),
                grads: grads.collect(&fake.params)?,
                gan: None,
                vae: vae.map(|v| tape.value(v).item()),
                d_real_mean: None,
                d_fake_mean: Some(mean_of(&tape, d_fake.output)),
            })
        }
        Phase::Vae => {
            let enc = bundle.encoder_forward(&mut tape, x, true)?;
            let z = reparameterize_with(&mut tape, enc.mu, enc.log_var, &batch.eps)?;
            let dec = bundle.decoder_forward(&mut tape, z, true)?;
            let v = vae_loss(&mut tape, x, dec.output, enc.mu, enc.log_var, bundle.layout())?;
            let loss = tape.scale(v, lambda)?;
            let grads = tape.backward(loss)?;
            let mut ids = enc.params;
            ids.extend(dec.params);
            Ok(PhaseOutput {
                loss: tape.value(loss).item(),
                grads: grads.collect(&ids)?,
                gan: None,
                vae: Some(tape.value(v).item()),
                d_real_mean: None,
                d_fake_mean: None,
            })
        }
    }
}

/// What a training step applied, handed to an audit hook before the update.
pub struct StepAudit<'a> {
    pub epoch: usize,
    pub batch: usize,
    pub phase: Phase,
    pub bundle: &'a ModelBundle,
    pub frozen: &'a FrozenBatch,
    pub objective: GeneratorObjective,
    pub lambda: f64,
    pub output: &'a PhaseOutput,
}

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct Trained {
    pub bundle: ModelBundle,
    pub trace: TrainingTrace,
    /// Main generator state after the last step.
    pub rng_state: RngState,
}

#[derive(Default)]
struct Accum {
    sums: [f64; 5],
    counts: [usize; 5],
}

impl Accum {
    fn add(&mut self, slot: usize, v: Option<f64>) {
        if let Some(v) = v {
            self.sums[slot] += v;
            self.counts[slot] += 1;
        }
    }

    fn mean(&self, slot: usize) -> Option<f64> {
        (self.counts[slot] > 0).then(|| self.sums[slot] / self.counts[slot] as f64)
    }
}

fn check_finite(out: &PhaseOutput, phase: Phase, epoch: usize, batch: usize) -> Result<()> {
    let ok = out.loss.is_finite() && out.grads.iter().all(Tensor::is_finite);
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite {
            phase: phase.name(),
            epoch,
            batch,
        })
    }
}

fn apply(
    bundle: &mut ModelBundle,
    phase: Phase,
    grads: &[Tensor],
    state: &mut AdamState,
    epoch: usize,
    batch: usize,
) -> Result<()> {
    let mut params: Vec<&mut Tensor> = match phase {
        Phase::Discriminator => bundle.discriminator.params_mut().collect(),
        Phase::Generator => bundle.generator.params_mut().collect(),
        Phase::Vae => {
            let mut v: Vec<&mut Tensor> = bundle.encoder.params_mut().collect();
            v.extend(bundle.decoder.params_mut());
            v
        }
    };
    adam_step(&mut params, grads, state)?;
    if params.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            phase: phase.name(),
            epoch,
            batch,
        })
    }
}

type Hook<'h> = Option<&'h mut dyn FnMut(&StepAudit<'_>)>;

/// Runs one of the three procedures. Epochs and batches in diagnostics are
/// 1-based.
pub fn train_with(
    bundle: &ModelBundle,
    features: &Tensor,
    config: &TrainConfig,
    procedure: Procedure,
    mut hook: Hook<'_>,
) -> Result<Trained> {
    config.validate()?;
    if features.shape().len() != 2 || features.rows() == 0 {
        return Err(Error::contract("training needs a non-empty [n, d] feature matrix"));
    }
    if features.cols() != bundle.feature_dim() {
        return Err(Error::Shape {
            op: "train",
            lhs: vec![bundle.feature_dim()],
            rhs: features.shape().to_vec(),
        });
    }
    if !features.is_finite() {
        return Err(Error::contract("training features contain non-finite values"));
    }

    let mut bundle = bundle.clone();
    let mut rng = DeterministicRng::new(config.seed);
    let mut vae_rng = DeterministicRng::with_stream(config.seed, VAE_STREAM);
    let adam = |params: Vec<Tensor>, lr: f64| {
        AdamState::new(&params, lr, config.beta1, config.beta2, config.adam_eps)
    };
    let mut opt_d = adam(phase_params(&bundle, Phase::Discriminator), config.lr_d);
    let mut opt_g = adam(phase_params(&bundle, Phase::Generator), config.lr_g);
    let mut opt_vae = adam(phase_params(&bundle, Phase::Vae), config.lr_vae);

    let adversarial = procedure != Procedure::Vae;
    let variational = procedure != Procedure::Gan;
    let (vae_weight, gen_lambda) = match procedure {
        Procedure::Gan => (0.0, 0.0),
        Procedure::Vae => (1.0, 0.0),
        Procedure::Joint => (config.lambda, config.lambda),
    };
    let dz = bundle.latent_dim();
    let n = features.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = TrainingTrace::default();

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut acc = Accum::default();
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let batch_no = b + 1;
            let real = features.select_rows(idx)?;
            let m = idx.len();
            let mut emit = |audit: StepAudit<'_>| {
                if let Some(h) = hook.as_mut() {
                    h(&audit);
                }
            };

            if adversarial {
                for _ in 0..config.d_steps_per_g_step {
                    let frozen = FrozenBatch {
                        real: real.clone(),
                        noise: draw_standard_normal(&mut rng, &[m, dz]),
                        eps: Tensor::zeros(&[m, dz]),
                    };
                    let phase = Phase::Discriminator;
                    let out = phase_loss_and_grad(&bundle, &frozen, phase, config.generator_objective, 0.0)?;
                    check_finite(&out, phase, epoch, batch_no)?;
                    emit(StepAudit {
                        epoch,
                        batch: batch_no,
                        phase,
                        bundle: &bundle,
                        frozen: &frozen,
                        objective: config.generator_objective,
                        lambda: 0.0,
                        output: &out,
                    });
                    apply(&mut bundle, phase, &out.grads, &mut opt_d, epoch, batch_no)?;
                    acc.add(0, out.gan);
                    acc.add(3, out.d_real_mean);
                    acc.add(4, out.d_fake_mean);
                }

                let noise = draw_standard_normal(&mut rng, &[m, dz]);
                let eps = if gen_lambda > 0.0 {
                    draw_standard_normal(&mut vae_rng, &[m, dz])
                } else {
                    Tensor::zeros(&[m, dz])
                };
                let frozen = FrozenBatch {
                    real: real.clone(),
                    noise,
                    eps,
                };
                let phase = Phase::Generator;
                let out = phase_loss_and_grad(&bundle, &frozen, phase, config.generator_objective, gen_lambda)?;
                check_finite(&out, phase, epoch, batch_no)?;
                emit(StepAudit {
                    epoch,
                    batch: batch_no,
                    phase,
                    bundle: &bundle,
                    frozen: &frozen,
                    objective: config.generator_objective,
                    lambda: gen_lambda,
                    output: &out,
                });
                apply(&mut bundle, phase, &out.grads, &mut opt_g, epoch, batch_no)?;
            }

            if variational {
                let frozen = FrozenBatch {
                    noise: Tensor::zeros(&[m, dz]),
                    eps: draw_standard_normal(&mut vae_rng, &[m, dz]),
                    real,
                };
                let phase = Phase::Vae;
                let out = phase_loss_and_grad(&bundle, &frozen, phase, config.generator_objective, vae_weight)?;
                check_finite(&out, phase, epoch, batch_no)?;
                acc.add(1, out.vae);
                // a zero weight means the variational networks sit out
                if vae_weight > 0.0 {
                    emit(StepAudit {
                        epoch,
                        batch: batch_no,
                        phase,
                        bundle: &bundle,
                        frozen: &frozen,
                        objective: config.generator_objective,
                        lambda: vae_weight,
                        output: &out,
                    });
                    apply(&mut bundle, phase, &out.grads, &mut opt_vae, epoch, batch_no)?;
                }
            }
        }

        let l_gan = acc.mean(0);
        let l_vae = acc.mean(1);
        let l_joint = match procedure {
            Procedure::Joint => l_gan.zip(l_vae).map(|(g, v)| g + config.lambda * v),
            _ => None,
        };
        let stats = EpochStats {
            epoch,
            l_gan,
            l_vae,
            l_joint,
            d_real_mean: acc.mean(3),
            d_fake_mean: acc.mean(4),
        };
        log::debug!("epoch {epoch}: {stats:?}");
        trace.epochs.push(stats);
    }

    Ok(Trained {
        bundle,
        trace,
        rng_state: rng.state(),
    })
}

/// Adversarial training of G and D only.
pub fn train_gan(bundle: &ModelBundle, features: &Tensor, config: &TrainConfig) -> Result<Trained> {
    train_with(bundle, features, config, Procedure::Gan, None)
}

/// Variational training of encoder and decoder only.
pub fn train_vae(bundle: &ModelBundle, features: &Tensor, config: &TrainConfig) -> Result<Trained> {
    train_with(bundle, features, config, Procedure::Vae, None)
}

/// Adversarial schedule interleaved with VAE steps, the variational term
/// weighted by `config.lambda` in both the generator and VAE updates.
pub fn train_joint(bundle: &ModelBundle, features: &Tensor, config: &TrainConfig) -> Result<Trained> {
    train_with(bundle, features, config, Procedure::Joint, None)
}
