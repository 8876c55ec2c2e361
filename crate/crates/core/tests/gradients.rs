mod common;

use flowsentry::diffcore::{draw_standard_normal, finite_difference_check, DeterministicRng, Tape, Tensor};
use flowsentry::nets::{HiddenActivation, Mlp, MlpSpec, OutputActivation};
use flowsentry::trainloop::{phase_loss_and_grad, phase_params, train_with, with_phase_params, Phase, Procedure, TrainConfig};

#[test]
fn three_layer_mlp_matches_central_differences() {
    let mut rng = DeterministicRng::new(3);
    for trial in 0..5 {
        let spec = MlpSpec::new(vec![4, 6, 5, 3], HiddenActivation::LeakyRelu, OutputActivation::Identity).unwrap();
        let mlp = Mlp::init(spec.clone(), &mut rng);
        let x = draw_standard_normal(&mut rng, &[7, 4]);
        let params: Vec<Tensor> = mlp.params().cloned().collect();
        let loss_and_grad = |ps: &[Tensor]| {
            let mut layers = mlp.layers().to_vec();
            for (l, pair) in layers.iter_mut().zip(ps.chunks(2)) {
                l.weight = pair[0].clone();
                l.bias = pair[1].clone();
            }
            let net = Mlp::from_layers(spec.clone(), layers)?;
            let mut tape = Tape::new();
            let input = tape.constant(x.clone());
            let (out, ids) = net.forward(&mut tape, input, true)?;
            let sq = tape.square(out)?;
            let root = tape.sum(sq)?;
            let grads = tape.backward(root)?;
            Ok((tape.value(root).item(), grads.collect(&ids)?))
        };
        let err = finite_difference_check(loss_and_grad, &params, 1e-5).unwrap();
        assert!(err < 1e-4, "trial {trial}: relative error {err:e}");
    }
}

/// Every gradient the training loop applies, for every phase of a few joint
/// epochs, agrees with central differences of the same frozen phase loss.
#[test]
fn applied_training_gradients_match_finite_differences() {
    let bundle = common::small_bundle(8, 3);
    let mut rng = DeterministicRng::new(9);
    let x = common::gaussian_rows(&mut rng, 40, &[0.5, -1.0, 2.0]);
    let config = TrainConfig {
        epochs: 2,
        batch_size: 16,
        lambda: 0.7,
        seed: 4,
        ..TrainConfig::default()
    };
    let mut audited = [0usize; 3];
    let mut worst = 0.0_f64;
    let mut failure = None;
    let mut hook = |step: &flowsentry::trainloop::StepAudit<'_>| {
        let slot = match step.phase {
            Phase::Discriminator => 0,
            Phase::Generator => 1,
            Phase::Vae => 2,
        };
        audited[slot] += 1;
        let params = phase_params(step.bundle, step.phase);
        let f = |ps: &[Tensor]| {
            let b = with_phase_params(step.bundle, step.phase, ps)?;
            let out = phase_loss_and_grad(&b, step.frozen, step.phase, step.objective, step.lambda)?;
            Ok((out.loss, out.grads))
        };
        match finite_difference_check(f, &params, 1e-6) {
            Ok(err) => worst = worst.max(err),
            Err(e) => failure = Some(e.to_string()),
        }
        // the loop applies exactly the gradients of the frozen phase loss
        let again = phase_loss_and_grad(step.bundle, step.frozen, step.phase, step.objective, step.lambda).unwrap();
        assert_eq!(again.grads, step.output.grads);
    };
    train_with(&bundle, &x, &config, Procedure::Joint, Some(&mut hook)).unwrap();
    assert_eq!(failure, None);
    // 3 batches per epoch, one step per phase per batch
    assert_eq!(audited, [6, 6, 6]);
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn generator_step_sees_the_variational_term_only_when_weighted() {
    let bundle = common::small_bundle(2, 3);
    let mut rng = DeterministicRng::new(5);
    let frozen = flowsentry::nets::FrozenBatch {
        real: common::gaussian_rows(&mut rng, 6, &[0.0, 0.0, 0.0]),
        noise: draw_standard_normal(&mut rng, &[6, 2]),
        eps: draw_standard_normal(&mut rng, &[6, 2]),
    };
    let objective = flowsentry::nets::GeneratorObjective::NonSaturating;
    let plain = phase_loss_and_grad(&bundle, &frozen, Phase::Generator, objective, 0.0).unwrap();
    let weighted = phase_loss_and_grad(&bundle, &frozen, Phase::Generator, objective, 2.0).unwrap();
    assert!(plain.vae.is_none());
    let vae = weighted.vae.unwrap();
    assert!((weighted.loss - (plain.loss + 2.0 * vae)).abs() < 1e-12);
    assert_ne!(plain.grads, weighted.grads);
}
