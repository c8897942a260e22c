//! The `gradcheck` subcommand: finite-difference checks of every loss.

use std::fmt;
use std::sync::Arc;

use dssl_core::gradcheck::{central_difference, max_relative_error};
use dssl_core::logicc::{compile_relaxation, enumerate_valid, CompiledRelaxation, Formula, GFunction};
use dssl_core::relaxations::{unsup_loss_grad_box, RelaxationSpec};
use dssl_core::rng::seeded_rng;
use dssl_core::sslnet::{Activation, AttributeParam, Head, Network, Objective, TrainConfig};
use dssl_core::synthdata::{Example, Label};
use rand::Rng;

use crate::error::Result;

pub const POINTWISE_TOLERANCE: f64 = 1e-4;
pub const NETWORK_TOLERANCE: f64 = 1e-3;
const POINTS: usize = 100;

/// Scales the analytic gradient of one named loss; lets the checker be
/// tested against a gradient that is known to be wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct Fault {
    pub loss: String,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub module: &'static str,
    pub loss: String,
    pub head: &'static str,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} module={} loss={} head={} max_rel_err={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.module,
            self.loss,
            self.head,
            self.max_rel_err,
            self.tolerance
        )
    }
}

fn simplex_specs() -> Vec<(String, RelaxationSpec)> {
    vec![
        ("E".into(), RelaxationSpec::entropy()),
        ("X".into(), RelaxationSpec::exclusivity()),
        ("PL".into(), RelaxationSpec::pseudo_label()),
        ("DP".into(), RelaxationSpec::det_prior(10.0)),
    ]
}

fn rule_variants() -> Result<Vec<(String, GFunction, Arc<CompiledRelaxation>)>> {
    let valid = enumerate_valid(&Formula::ExactlyOne(vec![0, 1, 2]), 3)?;
    [
        ("rules-identity", GFunction::Identity),
        ("rules-power10", GFunction::power(10.0)),
    ]
    .into_iter()
    .map(|(name, g)| Ok((name.to_string(), g, Arc::new(compile_relaxation(&valid, g, None)?))))
    .collect()
}

fn scale_for(fault: Option<&Fault>, loss: &str) -> f64 {
    match fault {
        Some(f) if f.loss == loss => f.factor,
        _ => 1.0,
    }
}

fn scaled(grad: Vec<f64>, factor: f64) -> Vec<f64> {
    grad.into_iter().map(|g| g * factor).collect()
}

/// Interior simplex point, away from argmax ties.
fn simplex_point(rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let k = rng.random_range(2..=6);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let floor = 1e-3;
        let theta: Vec<f64> = raw.iter().map(|r| floor + (1.0 - floor * k as f64) * r / sum).collect();
        let mut sorted = theta.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted[0] - sorted[1] >= 1e-4 {
            return theta;
        }
    }
}

fn pointwise(fault: Option<&Fault>) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = seeded_rng(11);
    for (name, spec) in simplex_specs() {
        let factor = scale_for(fault, &name);
        let mut worst: f64 = 0.0;
        for _ in 0..POINTS {
            let theta = simplex_point(&mut rng);
            let (_, analytic) = unsup_loss_grad_box(&spec, &theta)?;
            let numeric = central_difference(
                |t| unsup_loss_grad_box(&spec, t).map_or(f64::NAN, |r| r.0),
                &theta,
                1e-6,
            );
            worst = worst.max(max_relative_error(&scaled(analytic, factor), &numeric));
        }
        out.push(CheckResult {
            module: "relaxations",
            loss: name,
            head: "-",
            max_rel_err: worst,
            tolerance: POINTWISE_TOLERANCE,
        });
    }
    for (name, _, rules) in rule_variants()? {
        let factor = scale_for(fault, &name);
        let mut worst: f64 = 0.0;
        for _ in 0..POINTS {
            let theta: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..0.95)).collect();
            let (_, analytic) = rules.log_loss_grad(&AttributeParam::new(theta.clone())?)?;
            let numeric = central_difference(
                |t| {
                    AttributeParam::new(t.to_vec())
                        .and_then(|p| rules.log_loss_grad(&p))
                        .map_or(f64::NAN, |r| r.0)
                },
                &theta,
                1e-6,
            );
            worst = worst.max(max_relative_error(&scaled(analytic, factor), &numeric));
        }
        out.push(CheckResult {
            module: "logicc",
            loss: name,
            head: "-",
            max_rel_err: worst,
            tolerance: POINTWISE_TOLERANCE,
        });
    }
    Ok(out)
}

fn toy_batch(head: Head, k: usize) -> (Vec<Example>, Vec<Vec<f64>>) {
    let mut rng = seeded_rng(4);
    let xs: Vec<Vec<f64>> = (0..16)
        .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
        .collect();
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

fn network_check(
    head: Head,
    relaxation: Option<RelaxationSpec>,
    rules: Option<Arc<CompiledRelaxation>>,
    factor: f64,
) -> Result<f64> {
    let cfg = TrainConfig {
        lambda_u: if relaxation.is_some() { 1.0 } else { 0.0 },
        rampup_epochs: 0,
        relaxation,
        ..TrainConfig::default()
    };
    let obj = Objective::new(head, 3, &cfg, rules)?;
    let net = Network::init(&[2, 16, 16, 3], Activation::Tanh, head, 3)?;
    let (lab, unl) = toy_batch(head, 3);
    let (_, analytic) = obj.loss_flat_grad(&net, &lab, &unl, 0)?;
    let numeric = central_difference(
        |p| {
            let mut n = net.clone();
            n.set_params(p);
            obj.batch_loss(&n, &lab, &unl, 0).unwrap_or(f64::NAN)
        },
        &net.params(),
        1e-5,
    );
    Ok(max_relative_error(&scaled(analytic, factor), &numeric))
}

fn end_to_end(fault: Option<&Fault>) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut push = |loss: String, head: &'static str, err: f64| {
        out.push(CheckResult {
            module: "sslnet",
            loss,
            head,
            max_rel_err: err,
            tolerance: NETWORK_TOLERANCE,
        })
    };
    let sup = "supervised".to_string();
    push(
        sup.clone(),
        "softmax",
        network_check(Head::Softmax, None, None, scale_for(fault, &sup))?,
    );
    push(
        sup.clone(),
        "sigmoid",
        network_check(Head::Sigmoid, None, None, scale_for(fault, &sup))?,
    );
    for (name, spec) in simplex_specs() {
        let err = network_check(Head::Softmax, Some(spec), None, scale_for(fault, &name))?;
        push(name, "softmax", err);
    }
    for (name, g, rules) in rule_variants()? {
        let err = network_check(
            Head::Sigmoid,
            Some(RelaxationSpec::compiled_rules(g)),
            Some(rules),
            scale_for(fault, &name),
        )?;
        push(name, "sigmoid", err);
    }
    Ok(out)
}

/// Loss names accepted by `--fault`.
pub fn loss_names() -> Vec<String> {
    let mut names: Vec<String> = simplex_specs().into_iter().map(|(n, _)| n).collect();
    names.extend(["rules-identity", "rules-power10", "supervised"].map(String::from));
    names
}

/// Every pointwise and end-to-end check, in a fixed order.
pub fn run_all(fault: Option<&Fault>) -> Result<Vec<CheckResult>> {
    let mut results = pointwise(fault)?;
    results.extend(end_to_end(fault)?);
    Ok(results)
}
