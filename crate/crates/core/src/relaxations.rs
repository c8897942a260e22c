//! Per-sample unsupervised losses `l(θ) = log q(θ)` for relaxations of the
//! discrete prior over one-hot label parameters.
//!
//! All losses are in maximise orientation: larger is "more confident", the
//! maximum 0 is attained at the simplex vertices. Trainers negate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logicc::GFunction;

/// Probability clamp applied before any log or power.
pub const DEFAULT_EPSILON: f64 = 1e-7;

const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex with at least two components.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain(format!(
                "probability vector needs at least 2 components, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("component {v} outside [0, 1]")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("components sum to {sum}, not 1")));
        }
        Ok(Self(values))
    }

    /// The vertex `e_k` of the `k`-simplex.
    pub fn one_hot(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::Domain(format!("index {index} out of range for K = {k}")));
        }
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Self::new(v)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest component, ties resolved toward the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationKind {
    /// Minimum entropy.
    Entropy,
    /// Mutual exclusivity.
    MutualExclusivity,
    PseudoLabel,
    /// Deterministic prior `Σ_k θ_k^T`.
    DetPrior,
    /// A relaxation compiled from a rule set (see [`crate::logicc`]).
    CompiledRules,
}

impl RelaxationKind {
    /// Short tag used in reports and tables.
    pub fn tag(self) -> &'static str {
        match self {
            RelaxationKind::Entropy => "E",
            RelaxationKind::MutualExclusivity => "X",
            RelaxationKind::PseudoLabel => "PL",
            RelaxationKind::DetPrior => "DP",
            RelaxationKind::CompiledRules => "CompiledRules",
        }
    }

    /// Whether the loss is defined only for points on the simplex.
    pub fn requires_simplex(self) -> bool {
        !matches!(self, RelaxationKind::CompiledRules)
    }
}

/// Which relaxation is in force, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSpec {
    pub kind: RelaxationKind,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GFunction>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_temperature() -> f64 {
    10.0
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl RelaxationSpec {
    pub fn new(kind: RelaxationKind) -> Self {
        Self {
            kind,
            temperature: default_temperature(),
            g: None,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn entropy() -> Self {
        Self::new(RelaxationKind::Entropy)
    }

    pub fn exclusivity() -> Self {
        Self::new(RelaxationKind::MutualExclusivity)
    }

    pub fn pseudo_label() -> Self {
        Self::new(RelaxationKind::PseudoLabel)
    }

    pub fn det_prior(temperature: f64) -> Self {
        Self {
            temperature,
            ..Self::new(RelaxationKind::DetPrior)
        }
    }

    pub fn compiled_rules(g: GFunction) -> Self {
        Self {
            g: Some(g),
            ..Self::new(RelaxationKind::CompiledRules)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Parameter(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-3) {
            return Err(Error::Parameter(format!(
                "epsilon must lie in (0, 1e-3], got {}",
                self.epsilon
            )));
        }
        if self.kind == RelaxationKind::CompiledRules {
            match &self.g {
                Some(g) => g.validate()?,
                None => return Err(Error::Config("compiled_rules relaxation needs a g function".into())),
            }
        }
        Ok(())
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `log Σ exp(v_i)`, stable for large magnitudes.
pub(crate) fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `Σ_k θ_k log θ_k` with `0 log 0 = 0`.
pub fn entropy_loss(theta: &ProbVector) -> f64 {
    entropy_value(theta.as_slice())
}

/// `log Σ_k θ_k Π_{k'≠k} (1 − θ_k')`, components clamped to `[ε, 1−ε]`.
pub fn exclusivity_loss(theta: &ProbVector) -> f64 {
    exclusivity_value_grad(theta.as_slice(), DEFAULT_EPSILON, false).0
}

/// `log max_k θ_k`; also returns the selected index `k*`.
pub fn pseudo_label_loss(theta: &ProbVector) -> (f64, usize) {
    let k = theta.argmax();
    (theta.as_slice()[k].max(DEFAULT_EPSILON).ln(), k)
}

/// `log Σ_k θ_k^T`, evaluated as a logsumexp over `T log θ_k`.
pub fn dp_loss(theta: &ProbVector, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(dp_value_grad(theta.as_slice(), temperature, DEFAULT_EPSILON, false).0)
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("temperature must be positive, got {t}")))
    }
}

/// Loss value and raw partial derivatives `∂l/∂θ_k` for one of the simplex
/// relaxations. No projection onto the simplex tangent space is applied.
pub fn unsup_loss_grad(spec: &RelaxationSpec, theta: &ProbVector) -> Result<(f64, Vec<f64>)> {
    spec.validate()?;
    if spec.kind == RelaxationKind::CompiledRules {
        return Err(Error::Config(
            "compiled_rules losses are evaluated through logicc::CompiledRelaxation".into(),
        ));
    }
    Ok(simplex_loss_grad(spec, theta.as_slice()))
}

/// As [`unsup_loss_grad`] but on any point of the box `[0, 1]^K`, so that
/// coordinates can be perturbed independently.
pub fn unsup_loss_grad_box(spec: &RelaxationSpec, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    if theta.len() < 2 {
        return Err(Error::Domain("need at least 2 components".into()));
    }
    if let Some(v) = theta.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("component {v} outside [0, 1]")));
    }
    spec.validate()?;
    if spec.kind == RelaxationKind::CompiledRules {
        return Err(Error::Config(
            "compiled_rules losses are evaluated through logicc::CompiledRelaxation".into(),
        ));
    }
    Ok(simplex_loss_grad(spec, theta))
}

/// Unchecked variant used by the trainer on softmax outputs.
pub(crate) fn simplex_loss_grad(spec: &RelaxationSpec, theta: &[f64]) -> (f64, Vec<f64>) {
    let eps = spec.epsilon;
    match spec.kind {
        RelaxationKind::Entropy => {
            let value = entropy_value(theta);
            let grad = theta.iter().map(|&t| t.max(eps).ln() + 1.0).collect();
            (value, grad)
        }
        RelaxationKind::MutualExclusivity => exclusivity_value_grad(theta, eps, true),
        RelaxationKind::PseudoLabel => {
            let k = argmax(theta);
            let t = theta[k].max(eps);
            let mut grad = vec![0.0; theta.len()];
            grad[k] = 1.0 / t;
            (t.ln(), grad)
        }
        RelaxationKind::DetPrior => dp_value_grad(theta, spec.temperature, eps, true),
        RelaxationKind::CompiledRules => unreachable!("compiled rules are not a simplex loss"),
    }
}

fn entropy_value(theta: &[f64]) -> f64 {
    theta.iter().filter(|&&t| t > 0.0).map(|&t| t * t.ln()).sum()
}

fn exclusivity_value_grad(theta: &[f64], eps: f64, with_grad: bool) -> (f64, Vec<f64>) {
    let k = theta.len();
    let t: Vec<f64> = theta.iter().map(|&v| v.clamp(eps, 1.0 - eps)).collect();
    let one_minus: Vec<f64> = t.iter().map(|v| 1.0 - v).collect();

    // Product of (1 − θ) over all indices except those in `skip`.
    let prod_except = |skip: &[usize]| -> f64 {
        one_minus
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, v)| v)
            .product()
    };

    let sum: f64 = (0..k).map(|i| t[i] * prod_except(&[i])).sum();
    if !with_grad {
        return (sum.ln(), Vec::new());
    }
    let grad = (0..k)
        .map(|j| {
            let direct = prod_except(&[j]);
            let cross: f64 = (0..k).filter(|&i| i != j).map(|i| t[i] * prod_except(&[i, j])).sum();
            (direct - cross) / sum
        })
        .collect();
    (sum.ln(), grad)
}

fn dp_value_grad(theta: &[f64], temperature: f64, eps: f64, with_grad: bool) -> (f64, Vec<f64>) {
    let t: Vec<f64> = theta.iter().map(|&v| v.max(eps)).collect();
    let scaled: Vec<f64> = t.iter().map(|v| temperature * v.ln()).collect();
    let value = logsumexp(&scaled);
    if !with_grad {
        return (value, Vec::new());
    }
    // ∂/∂θ_k log Σ θ^T = T θ_k^{T−1} / Σ θ^T = T softmax(T log θ)_k / θ_k
    let grad = scaled
        .iter()
        .zip(&t)
        .map(|(s, v)| temperature * (s - value).exp() / v)
        .collect();
    (value, grad)
}
