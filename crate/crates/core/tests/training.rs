use std::sync::Arc;

use dssl_core::gradcheck::{central_difference, max_relative_error};
use dssl_core::logicc::{compile_relaxation, enumerate_valid, CompiledRelaxation, Formula, GFunction};
use dssl_core::relaxations::RelaxationSpec;
use dssl_core::rng::seeded_rng;
use dssl_core::sslnet::{evaluate, train, Activation, Head, Network, Objective, TrainConfig};
use dssl_core::synthdata::{gen_blobs, BlobSpec, Example, Label};
use dssl_core::Error;
use rand::Rng;

fn batch(head: Head, k: usize, seed: u64) -> (Vec<Example>, Vec<Vec<f64>>) {
    let mut rng = seeded_rng(seed);
    let mut point = || vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
    let xs: Vec<Vec<f64>> = (0..16).map(|_| point()).collect();
    let labelled = xs[..8]
        .iter()
        .enumerate()
        .map(|(i, x)| Example {
            x: x.clone(),
            y: match head {
                Head::Softmax => Label::Class(i % k),
                Head::Sigmoid => Label::Attributes((0..k).map(|j| j == i % k).collect()),
            },
        })
        .collect();
    (labelled, xs[8..].to_vec())
}

fn full_config(relaxation: Option<RelaxationSpec>, on_labelled: bool) -> TrainConfig {
    TrainConfig {
        lambda_u: if relaxation.is_some() { 1.0 } else { 0.0 },
        rampup_epochs: 0,
        apply_prior_to_labelled: on_labelled,
        relaxation,
        ..TrainConfig::default()
    }
}

fn check_network_gradient(
    head: Head,
    activation: Activation,
    cfg: &TrainConfig,
    rules: Option<Arc<CompiledRelaxation>>,
) -> f64 {
    let net = Network::init(&[2, 16, 16, 3], activation, head, 3).unwrap();
    let obj = Objective::new(head, 3, cfg, rules).unwrap();
    let (lab, unl) = batch(head, 3, 4);
    let (_, analytic) = obj.loss_flat_grad(&net, &lab, &unl, 0).unwrap();
    let numeric = central_difference(
        |p| {
            let mut n = net.clone();
            n.set_params(p);
            obj.batch_loss(&n, &lab, &unl, 0).unwrap()
        },
        &net.params(),
        1e-5,
    );
    max_relative_error(&analytic, &numeric)
}

#[test]
fn network_gradients_match_finite_differences() {
    let simplex = [
        None,
        Some(RelaxationSpec::entropy()),
        Some(RelaxationSpec::exclusivity()),
        Some(RelaxationSpec::pseudo_label()),
        Some(RelaxationSpec::det_prior(10.0)),
    ];
    for act in [Activation::Tanh, Activation::Relu] {
        for spec in &simplex {
            for on_labelled in [false, true] {
                let cfg = full_config(spec.clone(), on_labelled);
                let err = check_network_gradient(Head::Softmax, act, &cfg, None);
                assert!(err < 1e-3, "softmax {act:?} {spec:?}: {err:e}");
            }
        }
        let valid = enumerate_valid(&Formula::ExactlyOne(vec![0, 1, 2]), 3).unwrap();
        for g in [GFunction::Identity, GFunction::power(10.0)] {
            let rules = Arc::new(compile_relaxation(&valid, g, None).unwrap());
            for on_labelled in [false, true] {
                let cfg = full_config(Some(RelaxationSpec::compiled_rules(g)), on_labelled);
                let err = check_network_gradient(Head::Sigmoid, act, &cfg, Some(rules.clone()));
                assert!(err < 1e-3, "sigmoid {act:?} {g:?}: {err:e}");
            }
        }
        let err = check_network_gradient(Head::Sigmoid, act, &full_config(None, false), None);
        assert!(err < 1e-3, "sigmoid {act:?} supervised: {err:e}");
    }
}

#[test]
fn small_sgd_step_never_increases_loss() {
    let cfg = full_config(Some(RelaxationSpec::det_prior(10.0)), false);
    let obj = Objective::new(Head::Softmax, 3, &cfg, None).unwrap();
    for trial in 0..20 {
        let net = Network::init(&[2, 16, 16, 3], Activation::Relu, Head::Softmax, trial).unwrap();
        let (lab, unl) = batch(Head::Softmax, 3, 100 + trial);
        let (before, grad) = obj.loss_flat_grad(&net, &lab, &unl, 0).unwrap();
        let mut stepped = net.clone();
        let p: Vec<f64> = net.params().iter().zip(&grad).map(|(w, g)| w - 1e-4 * g).collect();
        stepped.set_params(&p);
        let after = obj.batch_loss(&stepped, &lab, &unl, 0).unwrap();
        assert!(after <= before, "trial {trial}: {before} -> {after}");
    }
}

fn blobs4(seed: u64) -> dssl_core::synthdata::Dataset {
    gen_blobs(
        &BlobSpec {
            classes: 4,
            dims: 2,
            separation: 3.0,
            labelled_per_class: 4,
            unlabelled: 2000,
            test: 2000,
        },
        seed,
    )
    .unwrap()
}

#[test]
fn training_is_deterministic() {
    let data = blobs4(1);
    let cfg = TrainConfig {
        epochs: 3,
        seed: 9,
        relaxation: Some(RelaxationSpec::det_prior(10.0)),
        ..TrainConfig::default()
    };
    let obj = Objective::new(Head::Softmax, 4, &cfg, None).unwrap();
    let run = || {
        let net = Network::init(&[2, 16, 4], Activation::Relu, Head::Softmax, 9).unwrap();
        train(net, &data, &obj).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.metrics, b.metrics);
    let bits = |n: &Network| n.params().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.network), bits(&b.network));
}

#[test]
fn supervised_fits_separable_blobs() {
    let data = gen_blobs(
        &BlobSpec {
            classes: 2,
            dims: 2,
            separation: 10.0,
            labelled_per_class: 100,
            unlabelled: 0,
            test: 200,
        },
        5,
    )
    .unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        ..TrainConfig::supervised()
    };
    let obj = Objective::new(Head::Softmax, 2, &cfg, None).unwrap();
    let net = Network::init(&[2, 64, 64, 2], Activation::Relu, Head::Softmax, 5).unwrap();
    let out = train(net, &data, &obj).unwrap();
    let best = out.metrics.iter().map(|m| m.train_accuracy).fold(0.0, f64::max);
    assert!(best >= 0.99, "best train accuracy {best}");
}

#[test]
fn deterministic_prior_raises_mean_log_q() {
    let ramp = 5;
    let mut rising = 0;
    for seed in 0..10 {
        let data = blobs4(seed);
        let cfg = TrainConfig {
            lambda_u: 0.3,
            rampup_epochs: ramp,
            learning_rate: 0.001,
            epochs: ramp + 20,
            batch_unlabelled: 128,
            seed,
            relaxation: Some(RelaxationSpec::det_prior(10.0)),
            ..TrainConfig::default()
        };
        let obj = Objective::new(Head::Softmax, 4, &cfg, None).unwrap();
        let net = Network::init(&[2, 64, 64, 4], Activation::Tanh, Head::Softmax, seed).unwrap();
        let out = train(net, &data, &obj).unwrap();
        let trace: Vec<f64> = out.metrics[ramp..].iter().map(|m| m.mean_log_q.unwrap()).collect();
        assert_eq!(trace.len(), 20);
        if trace.windows(2).all(|w| w[1] >= w[0]) {
            rising += 1;
        }
    }
    assert!(rising >= 8, "mean log q rose monotonically in {rising}/10 seeds");
}

#[test]
fn uniform_predictor_is_at_chance() {
    let data = blobs4(2);
    let net = Network::zeros(&[2, 8, 4], Activation::Relu, Head::Softmax).unwrap();
    let ev = evaluate(&net, &data.test, None).unwrap();
    let sd = (0.25 * 0.75 / data.test.len() as f64).sqrt();
    assert!((ev.accuracy - 0.25).abs() <= 3.0 * sd, "{}", ev.accuracy);
    assert_eq!(ev.histogram.iter().sum::<u64>(), data.test.len() as u64);
}

#[test]
fn mismatched_head_and_relaxation_is_rejected() {
    let cfg = full_config(Some(RelaxationSpec::det_prior(10.0)), false);
    assert!(matches!(
        Objective::new(Head::Sigmoid, 3, &cfg, None),
        Err(Error::Config(_))
    ));
}

#[test]
fn weights_survive_a_file_round_trip() {
    let net = Network::init(&[2, 5, 3], Activation::Tanh, Head::Softmax, 12).unwrap();
    let path = std::env::temp_dir().join(format!("dssl-net-{}.bin", std::process::id()));
    net.save(&path).unwrap();
    let back = Network::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(net, back);
}
