//! The minimised training loss
//!
//! ```text
//! L(ω) = −[ mean_i log p(y_i | θ̃_i) + λ_eff · mean_j log q(θ̃_j) ]
//! ```
//!
//! with `λ_eff = λ · min(1, epoch / rampup)`, and optionally the same prior
//! term applied to the labelled predictions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::kernel::{log_sum_exp_row, softplus, Dense, Matrix};
use super::network::{Head, Network};
use crate::error::{Error, Result};
use crate::logicc::CompiledRelaxation;
use crate::relaxations::{simplex_loss_grad, RelaxationKind, RelaxationSpec};
use crate::synthdata::{Dataset, Example, Label, LabelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the unsupervised term.
    pub lambda_u: f64,
    /// Epochs over which the unsupervised weight ramps linearly from 0.
    pub rampup_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_labelled: usize,
    pub batch_unlabelled: usize,
    pub seed: u64,
    /// Also apply the prior term to labelled predictions.
    pub apply_prior_to_labelled: bool,
    /// `None` trains on the labelled data only.
    pub relaxation: Option<RelaxationSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_u: 1.0,
            rampup_epochs: 10,
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 0.0,
            epochs: 100,
            batch_labelled: 32,
            batch_unlabelled: 32,
            seed: 0,
            apply_prior_to_labelled: false,
            relaxation: None,
        }
    }
}

impl TrainConfig {
    pub fn supervised() -> Self {
        Self {
            lambda_u: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("train.{name}: {msg}")));
        if !(self.lambda_u >= 0.0 && self.lambda_u.is_finite()) {
            return field("lambda_u", format!("must be non-negative, got {}", self.lambda_u));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return field("learning_rate", format!("must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return field("momentum", format!("must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0) {
            return field(
                "weight_decay",
                format!("must be non-negative, got {}", self.weight_decay),
            );
        }
        if self.batch_labelled == 0 {
            return field("batch_labelled", "must be at least 1".into());
        }
        if self.batch_unlabelled == 0 {
            return field("batch_unlabelled", "must be at least 1".into());
        }
        if self.epochs == 0 {
            return field("epochs", "must be at least 1".into());
        }
        if let Some(r) = &self.relaxation {
            r.validate()
                .map_err(|e| Error::Config(format!("train.relaxation: {e}")))?;
        } else if self.lambda_u > 0.0 {
            return field("lambda_u", "positive weight needs a relaxation".into());
        }
        Ok(())
    }

    /// Unsupervised weight in force during `epoch` (0-based).
    pub fn lambda_at(&self, epoch: usize) -> f64 {
        if self.rampup_epochs == 0 {
            self.lambda_u
        } else {
            self.lambda_u * (epoch as f64 / self.rampup_epochs as f64).min(1.0)
        }
    }
}

/// The relaxation applied to predictions, resolved against a head.
#[derive(Debug, Clone)]
pub enum UnsupervisedPrior {
    None,
    Simplex(RelaxationSpec),
    Rules(Arc<CompiledRelaxation>),
}

impl UnsupervisedPrior {
    /// `(log q(θ), ∂ log q/∂θ)` for one prediction.
    pub fn log_q_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            UnsupervisedPrior::None => Ok((0.0, vec![0.0; theta.len()])),
            UnsupervisedPrior::Simplex(spec) => Ok(simplex_loss_grad(spec, theta)),
            UnsupervisedPrior::Rules(c) => c.log_loss_grad_unchecked(theta),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, UnsupervisedPrior::None)
    }
}

/// Components of one evaluation of the training loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// Supervised part, minimised orientation.
    pub supervised: f64,
    /// `−λ_eff · mean log q` over the unlabelled batch (plus the labelled
    /// prior term when enabled).
    pub unsupervised: f64,
    /// Mean `log q(θ̃)` over the unlabelled batch.
    pub mean_log_q: f64,
    pub total: f64,
}

/// Loss and gradient evaluator bound to a head and a prior.
#[derive(Debug, Clone)]
pub struct Objective {
    head: Head,
    num_outputs: usize,
    prior: UnsupervisedPrior,
    config: TrainConfig,
}

impl Objective {
    /// Resolve the configured relaxation; `rules` is required for
    /// `compiled_rules`. Table-row relaxations assume a simplex and are
    /// rejected for the sigmoid head.
    pub fn new(
        head: Head,
        num_outputs: usize,
        config: &TrainConfig,
        rules: Option<Arc<CompiledRelaxation>>,
    ) -> Result<Self> {
        config.validate()?;
        let prior = match &config.relaxation {
            None => UnsupervisedPrior::None,
            Some(spec) if spec.kind == RelaxationKind::CompiledRules => {
                let rules = rules.ok_or_else(|| Error::Config("compiled_rules relaxation needs a rule set".into()))?;
                if rules.num_attrs() != num_outputs {
                    return Err(Error::Config(format!(
                        "rule set has {} attributes but the network emits {num_outputs}",
                        rules.num_attrs()
                    )));
                }
                if rules.dnf().is_unsatisfiable() {
                    return Err(Error::Unsatisfiable);
                }
                let rules = (*rules).clone().with_epsilon(spec.epsilon)?;
                UnsupervisedPrior::Rules(Arc::new(rules))
            }
            Some(spec) => {
                if head == Head::Sigmoid {
                    return Err(Error::Config(format!(
                        "relaxation {:?} needs a softmax head; the sigmoid head pairs only with compiled_rules",
                        spec.kind
                    )));
                }
                UnsupervisedPrior::Simplex(spec.clone())
            }
        };
        Ok(Self {
            head,
            num_outputs,
            prior,
            config: config.clone(),
        })
    }

    pub fn prior(&self) -> &UnsupervisedPrior {
        &self.prior
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn check_dataset(&self, net: &Network, data: &Dataset) -> Result<()> {
        if net.head != self.head || net.output_width() != self.num_outputs {
            return Err(Error::Config("network does not match the objective".into()));
        }
        if data.dims != net.input_width() {
            return Err(Error::Config(format!(
                "dataset has {} features but the network takes {}",
                data.dims,
                net.input_width()
            )));
        }
        if data.num_outputs != self.num_outputs {
            return Err(Error::Config(format!(
                "dataset has {} outputs but the network emits {}",
                data.num_outputs, self.num_outputs
            )));
        }
        let expected = match self.head {
            Head::Softmax => LabelKind::Class,
            Head::Sigmoid => LabelKind::Attributes,
        };
        if data.label_kind != expected {
            return Err(Error::Config(format!(
                "{:?} labels do not fit a {:?} head",
                data.label_kind, self.head
            )));
        }
        Ok(())
    }

    fn check_label(&self, y: &Label) -> Result<()> {
        match (self.head, y) {
            (Head::Softmax, Label::Class(c)) if *c < self.num_outputs => Ok(()),
            (Head::Sigmoid, Label::Attributes(v)) if v.len() == self.num_outputs => Ok(()),
            _ => Err(Error::Config(format!(
                "label {y:?} does not fit the {:?} head",
                self.head
            ))),
        }
    }

    /// Minimised loss for one labelled and one unlabelled batch.
    pub fn batch_loss(
        &self,
        net: &Network,
        labelled: &[Example],
        unlabelled: &[Vec<f64>],
        epoch: usize,
    ) -> Result<f64> {
        Ok(self.loss_and_grad(net, labelled, unlabelled, epoch, false)?.0.total)
    }

    /// Loss breakdown and per-layer parameter gradients.
    pub fn batch_loss_grad(
        &self,
        net: &Network,
        labelled: &[Example],
        unlabelled: &[Vec<f64>],
        epoch: usize,
    ) -> Result<(LossBreakdown, Vec<Dense>)> {
        let (loss, grads) = self.loss_and_grad(net, labelled, unlabelled, epoch, true)?;
        Ok((loss, grads.expect("requested")))
    }

    /// Total loss and its gradient flattened in [`Network::params`] order.
    pub fn loss_flat_grad(
        &self,
        net: &Network,
        labelled: &[Example],
        unlabelled: &[Vec<f64>],
        epoch: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let (loss, grads) = self.batch_loss_grad(net, labelled, unlabelled, epoch)?;
        let mut flat = Vec::with_capacity(net.num_params());
        for g in &grads {
            flat.extend_from_slice(&g.weights);
            flat.extend_from_slice(&g.bias);
        }
        Ok((loss.total, flat))
    }

    fn loss_and_grad(
        &self,
        net: &Network,
        labelled: &[Example],
        unlabelled: &[Vec<f64>],
        epoch: usize,
        with_grad: bool,
    ) -> Result<(LossBreakdown, Option<Vec<Dense>>)> {
        if labelled.is_empty() {
            return Err(Error::Config("labelled batch is empty".into()));
        }
        let lambda = if self.prior.is_none() {
            0.0
        } else {
            self.config.lambda_at(epoch)
        };
        let use_unlabelled = lambda > 0.0;
        if use_unlabelled && unlabelled.is_empty() {
            return Err(Error::Config(
                "unlabelled batch is empty but the unsupervised weight is positive".into(),
            ));
        }
        let width = net.input_width();
        let n_l = labelled.len();
        let n_u = if use_unlabelled { unlabelled.len() } else { 0 };
        let mut rows: Vec<&[f64]> = Vec::with_capacity(n_l + n_u);
        for e in labelled {
            self.check_label(&e.y)?;
            rows.push(&e.x);
        }
        if use_unlabelled {
            rows.extend(unlabelled.iter().map(Vec::as_slice));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::Domain(format!(
                "input width {} does not match network input {width}",
                r.len()
            )));
        }
        let tape = net.forward_tape(Matrix::from_rows(&rows, width));
        let k = self.num_outputs;
        let mut dlogits = Matrix::zeros(rows.len(), k);

        let inv_l = 1.0 / n_l as f64;
        let mut supervised = 0.0;
        for (i, e) in labelled.iter().enumerate() {
            let z = tape.logits.row(i);
            let theta = tape.outputs.row(i);
            let d = dlogits.row_mut(i);
            match &e.y {
                Label::Class(c) => {
                    supervised += log_sum_exp_row(z) - z[*c];
                    for (j, dj) in d.iter_mut().enumerate() {
                        *dj = (theta[j] - if j == *c { 1.0 } else { 0.0 }) * inv_l;
                    }
                }
                Label::Attributes(y) => {
                    for j in 0..k {
                        let yj = if y[j] { 1.0 } else { 0.0 };
                        supervised += softplus(z[j]) - yj * z[j];
                        d[j] = (theta[j] - yj) * inv_l;
                    }
                }
            }
        }
        supervised *= inv_l;

        let mut unsupervised = 0.0;
        let mut sum_log_q = 0.0;
        if lambda > 0.0 {
            let apply = |row: usize, weight: f64, dlogits: &mut Matrix| -> Result<f64> {
                let theta = tape.outputs.row(row);
                let (log_q, g) = self.prior.log_q_grad(theta)?;
                // minimised term: −weight · log q
                let dtheta: Vec<f64> = g.iter().map(|gk| -weight * gk).collect();
                let d = dlogits.row_mut(row);
                match self.head {
                    Head::Softmax => {
                        let dot: f64 = dtheta.iter().zip(theta).map(|(a, b)| a * b).sum();
                        for j in 0..k {
                            d[j] += theta[j] * (dtheta[j] - dot);
                        }
                    }
                    Head::Sigmoid => {
                        for j in 0..k {
                            d[j] += dtheta[j] * theta[j] * (1.0 - theta[j]);
                        }
                    }
                }
                Ok(log_q)
            };
            let w_u = lambda / n_u as f64;
            for j in 0..n_u {
                let log_q = apply(n_l + j, w_u, &mut dlogits)?;
                sum_log_q += log_q;
                unsupervised -= w_u * log_q;
            }
            if self.config.apply_prior_to_labelled {
                let w_l = lambda * inv_l;
                for i in 0..n_l {
                    unsupervised -= w_l * apply(i, w_l, &mut dlogits)?;
                }
            }
        }

        let breakdown = LossBreakdown {
            supervised,
            unsupervised,
            mean_log_q: if n_u > 0 { sum_log_q / n_u as f64 } else { 0.0 },
            total: supervised + unsupervised,
        };
        let grads = with_grad.then(|| net.backward(&tape, dlogits));
        Ok((breakdown, grads))
    }

    /// Mean `log q(θ̃)` of the network's predictions on `xs`; `None` without a prior.
    pub fn mean_log_q(&self, net: &Network, xs: &[Vec<f64>]) -> Result<Option<f64>> {
        if self.prior.is_none() || xs.is_empty() {
            return Ok(None);
        }
        let out = net.predict(&Matrix::from_rows(xs, net.input_width()))?;
        let mut sum = 0.0;
        for r in 0..out.rows {
            sum += self.prior.log_q_grad(out.row(r))?.0;
        }
        Ok(Some(sum / out.rows as f64))
    }
}
