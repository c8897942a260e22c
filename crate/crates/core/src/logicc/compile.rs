//! Continuous relaxation `q_R(θ)` of the support function of a rule set.
//!
//! Each clause becomes a product: positive literals map to `g(θ_k)`,
//! negative literals to `g(1 − θ_k)`, and the clauses are summed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dnf::{bit_string, DnfForm, Polarity, ValidSet};
use crate::error::{Error, Result};
use crate::relaxations::{logsumexp, DEFAULT_EPSILON};
use crate::sslnet::AttributeParam;

/// Continuous stand-in for the point masses at 0 and 1, with `g(0) = 0`
/// and `g(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GFunction {
    /// `g(t) = t`; the compiled relaxation is then the semantic loss.
    Identity,
    /// `g(t) = t^T`.
    Power { t: f64 },
}

impl GFunction {
    pub fn power(t: f64) -> Self {
        GFunction::Power { t }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GFunction::Identity => Ok(()),
            GFunction::Power { t } if t > 0.0 && t.is_finite() => Ok(()),
            GFunction::Power { t } => Err(Error::Parameter(format!("g power must be positive, got {t}"))),
        }
    }

    fn exponent(&self) -> f64 {
        match *self {
            GFunction::Identity => 1.0,
            GFunction::Power { t } => t,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            GFunction::Identity => x,
            GFunction::Power { t } => x.powf(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompilationMode {
    /// One complete-literal clause per valid vector; clauses are disjoint.
    Minterm,
    /// Clauses of an arbitrary DNF. Overlapping clauses can push the value
    /// above 1 at vertices covered more than once.
    CompactDnf,
}

/// An immutable, thread-shareable compiled rule relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledRelaxation {
    dnf: DnfForm,
    g: GFunction,
    // log π_y per clause; all zero when unweighted
    log_weights: Vec<f64>,
    weighted: bool,
    mode: CompilationMode,
    epsilon: f64,
}

/// Compile the minterm relaxation of a valid set.
///
/// `weights` optionally attaches a class probability to valid vectors; any
/// valid vector not listed keeps weight 1. Weighting is non-canonical and
/// off by default.
pub fn compile_relaxation(
    valid: &ValidSet,
    g: GFunction,
    weights: Option<&BTreeMap<Vec<bool>, f64>>,
) -> Result<CompiledRelaxation> {
    g.validate()?;
    let dnf = valid.to_minterms();
    let mut log_weights = vec![0.0; dnf.clauses.len()];
    if let Some(weights) = weights {
        for (vector, &w) in weights {
            if !valid.contains(vector) {
                return Err(Error::Config(format!(
                    "weight given for {} which is not in the valid set",
                    bit_string(vector)
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!(
                    "weight for {} must be positive, got {w}",
                    bit_string(vector)
                )));
            }
            let idx = valid.iter().position(|v| v == vector).expect("checked membership");
            log_weights[idx] = w.ln();
        }
    }
    Ok(CompiledRelaxation {
        dnf,
        g,
        log_weights,
        weighted: weights.is_some(),
        mode: CompilationMode::Minterm,
        epsilon: DEFAULT_EPSILON,
    })
}

/// Compile directly from a (possibly compact) DNF. Opt-in; see
/// [`CompilationMode::CompactDnf`].
pub fn compile_dnf_relaxation(dnf: &DnfForm, g: GFunction) -> Result<CompiledRelaxation> {
    g.validate()?;
    let mode = if dnf.is_minterm_form() {
        CompilationMode::Minterm
    } else {
        CompilationMode::CompactDnf
    };
    Ok(CompiledRelaxation {
        log_weights: vec![0.0; dnf.clauses.len()],
        dnf: dnf.clone(),
        g,
        weighted: false,
        mode,
        epsilon: DEFAULT_EPSILON,
    })
}

impl CompiledRelaxation {
    pub fn num_attrs(&self) -> usize {
        self.dnf.num_attrs
    }

    pub fn dnf(&self) -> &DnfForm {
        &self.dnf
    }

    pub fn g(&self) -> GFunction {
        self.g
    }

    pub fn mode(&self) -> CompilationMode {
        self.mode
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1e-3) {
            return Err(Error::Parameter(format!(
                "epsilon must lie in (0, 1e-3], got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// `q_R(θ)` by direct summation of clause products, without clamping.
    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        self.check_width(theta)?;
        Ok(self
            .dnf
            .clauses
            .iter()
            .zip(&self.log_weights)
            .map(|(clause, lw)| {
                lw.exp()
                    * clause
                        .literals()
                        .map(|(k, p)| match p {
                            Polarity::Positive => self.g.apply(theta[k]),
                            Polarity::Negative => self.g.apply(1.0 - theta[k]),
                        })
                        .product::<f64>()
            })
            .sum())
    }

    fn check_width(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dnf.num_attrs {
            return Err(Error::Domain(format!(
                "expected {} attributes, got {}",
                self.dnf.num_attrs,
                theta.len()
            )));
        }
        Ok(())
    }

    /// `(log q_R(θ), ∂ log q_R / ∂θ)` in log-space, `θ` clamped to `[ε, 1−ε]`.
    pub fn log_loss_grad(&self, theta: &AttributeParam) -> Result<(f64, Vec<f64>)> {
        self.check_width(theta.as_slice())?;
        self.log_loss_grad_unchecked(theta.as_slice())
    }

    pub(crate) fn log_loss_grad_unchecked(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        if self.dnf.is_unsatisfiable() {
            return Err(Error::Unsatisfiable);
        }
        let eps = self.epsilon;
        let power = self.g.exponent();
        let t: Vec<f64> = theta.iter().map(|&v| v.clamp(eps, 1.0 - eps)).collect();
        let log_pos: Vec<f64> = t.iter().map(|v| power * v.ln()).collect();
        let log_neg: Vec<f64> = t.iter().map(|v| power * (-v).ln_1p()).collect();

        let scores: Vec<f64> = self
            .dnf
            .clauses
            .iter()
            .zip(&self.log_weights)
            .map(|(clause, lw)| {
                lw + clause
                    .literals()
                    .map(|(k, p)| match p {
                        Polarity::Positive => log_pos[k],
                        Polarity::Negative => log_neg[k],
                    })
                    .sum::<f64>()
            })
            .collect();
        let value = logsumexp(&scores);

        let mut grad = vec![0.0; t.len()];
        for (clause, s) in self.dnf.clauses.iter().zip(&scores) {
            let share = (s - value).exp();
            for (k, p) in clause.literals() {
                grad[k] += share
                    * match p {
                        Polarity::Positive => power / t[k],
                        Polarity::Negative => -power / (1.0 - t[k]),
                    };
            }
        }
        Ok((value, grad))
    }
}
