//! Mini-batch SGD with momentum and split evaluation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kernel::{Dense, Matrix};
use super::network::{Head, Network};
use super::objective::Objective;
use crate::error::{Error, Result};
use crate::logicc::ValidSet;
use crate::relaxations::argmax;
use crate::rng::{derive_seed, seeded_rng, SeededRng};
use crate::synthdata::{Dataset, Example, Label};

pub const HISTOGRAM_BINS: usize = 50;

/// Interval whose confidence mass counts as "in between".
pub const INTERMEDIATE_BAND: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based epoch number.
    pub epoch: usize,
    pub lambda_eff: f64,
    /// Mean supervised loss over the epoch's steps.
    pub supervised_loss: f64,
    /// Mean weighted unsupervised loss over the epoch's steps.
    pub unsupervised_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Mean `log q` over the whole unlabelled split at the end of the epoch.
    pub mean_log_q: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub metrics: Vec<EpochMetrics>,
}

/// Accuracy and confidence statistics on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub accuracy: f64,
    /// Counts of the true-label confidence over [`HISTOGRAM_BINS`] equal bins on `[0, 1]`.
    pub histogram: Vec<u64>,
    /// Fraction of confidences strictly inside [`INTERMEDIATE_BAND`].
    pub intermediate_fraction: f64,
    /// Fraction of rounded predictions outside the valid set, when one is given.
    pub violation_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub labelled: Evaluation,
    pub unlabelled: Evaluation,
    pub test: Evaluation,
}

/// Endless reshuffled passes over `0..n`.
struct CyclicSampler {
    order: Vec<usize>,
    at: usize,
}

impl CyclicSampler {
    fn new(n: usize, rng: &mut SeededRng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, at: 0 }
    }

    fn next_batch(&mut self, size: usize, rng: &mut SeededRng) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.at == self.order.len() {
                self.order.shuffle(rng);
                self.at = 0;
            }
            out.push(self.order[self.at]);
            self.at += 1;
        }
        out
    }
}

fn bin_of(v: f64) -> usize {
    ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

/// Probability the prediction assigns to the true label: the class component
/// for a softmax head, the product of matched attribute probabilities for a
/// sigmoid head.
pub fn true_label_confidence(theta: &[f64], y: &Label) -> f64 {
    match y {
        Label::Class(c) => theta[*c],
        Label::Attributes(bits) => theta
            .iter()
            .zip(bits)
            .map(|(&t, &b)| if b { t } else { 1.0 - t })
            .product(),
    }
}

fn is_correct(theta: &[f64], y: &Label) -> bool {
    match y {
        Label::Class(c) => argmax(theta) == *c,
        Label::Attributes(bits) => theta.iter().zip(bits).all(|(&t, &b)| (t > 0.5) == b),
    }
}

/// Accuracy, confidence histogram and (with `valid`) rule-violation rate.
pub fn evaluate(net: &Network, examples: &[Example], valid: Option<&ValidSet>) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty split".into()));
    }
    let out = net.predict(&Matrix::from_rows(
        &examples.iter().map(|e| e.x.as_slice()).collect::<Vec<_>>(),
        net.input_width(),
    ))?;
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let (mut correct, mut between, mut violations) = (0usize, 0usize, 0usize);
    for (i, e) in examples.iter().enumerate() {
        let theta = out.row(i);
        if is_correct(theta, &e.y) {
            correct += 1;
        }
        let c = true_label_confidence(theta, &e.y);
        histogram[bin_of(c)] += 1;
        if c > INTERMEDIATE_BAND.0 && c < INTERMEDIATE_BAND.1 {
            between += 1;
        }
        if let Some(v) = valid {
            let rounded: Vec<bool> = match net.head {
                Head::Sigmoid => theta.iter().map(|&t| t > 0.5).collect(),
                Head::Softmax => {
                    let k = argmax(theta);
                    (0..theta.len()).map(|j| j == k).collect()
                }
            };
            if !v.contains(&rounded) {
                violations += 1;
            }
        }
    }
    let n = examples.len() as f64;
    Ok(Evaluation {
        n: examples.len(),
        accuracy: correct as f64 / n,
        histogram,
        intermediate_fraction: between as f64 / n,
        violation_rate: valid.map(|_| violations as f64 / n),
    })
}

pub fn evaluate_splits(net: &Network, data: &Dataset, valid: Option<&ValidSet>) -> Result<SplitEvaluation> {
    Ok(SplitEvaluation {
        labelled: evaluate(net, &data.labelled, valid)?,
        unlabelled: evaluate(net, &data.unlabelled_examples(), valid)?,
        test: evaluate(net, &data.test, valid)?,
    })
}

fn accuracy(net: &Network, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    Ok(evaluate(net, examples, None)?.accuracy)
}

/// Train `net` on `data`. Each step draws one labelled and one unlabelled
/// batch; an epoch is as many steps as it takes to cover the larger split.
pub fn train(mut net: Network, data: &Dataset, objective: &Objective) -> Result<TrainOutcome> {
    objective.check_dataset(&net, data)?;
    let cfg = objective.config();
    if data.labelled.is_empty() {
        return Err(Error::Config("dataset has no labelled examples".into()));
    }
    let mut rng = seeded_rng(derive_seed(cfg.seed, 1));
    let n_l = data.labelled.len();
    let n_u = data.unlabelled.len();
    let b_l = cfg.batch_labelled.min(n_l);
    let b_u = cfg.batch_unlabelled.min(n_u.max(1));
    let mut steps = n_l.div_ceil(b_l);
    if n_u > 0 {
        steps = steps.max(n_u.div_ceil(b_u));
    }
    let mut lab_sampler = CyclicSampler::new(n_l, &mut rng);
    let mut unl_sampler = CyclicSampler::new(n_u, &mut rng);
    let mut velocity: Vec<Dense> = net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();

    let mut metrics = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lambda_eff = if objective.prior().is_none() {
            0.0
        } else {
            cfg.lambda_at(epoch)
        };
        let (mut sup_sum, mut unsup_sum) = (0.0, 0.0);
        for step in 0..steps {
            let lab: Vec<Example> = lab_sampler
                .next_batch(b_l, &mut rng)
                .into_iter()
                .map(|i| data.labelled[i].clone())
                .collect();
            let unl: Vec<Vec<f64>> = if n_u > 0 {
                unl_sampler
                    .next_batch(b_u, &mut rng)
                    .into_iter()
                    .map(|i| data.unlabelled[i].clone())
                    .collect()
            } else {
                Vec::new()
            };
            let (loss, grads) = objective.batch_loss_grad(&net, &lab, &unl, epoch)?;
            if !loss.total.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    step,
                    detail: format!(
                        "loss is not finite (supervised {}, unsupervised {})",
                        loss.supervised, loss.unsupervised
                    ),
                });
            }
            sup_sum += loss.supervised;
            unsup_sum += loss.unsupervised;
            sgd_step(
                &mut net,
                &mut velocity,
                &grads,
                cfg.learning_rate,
                cfg.momentum,
                cfg.weight_decay,
            );
            if net
                .layers
                .iter()
                .any(|l| l.weights.iter().chain(&l.bias).any(|w| !w.is_finite()))
            {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    step,
                    detail: "weights became non-finite".into(),
                });
            }
        }
        metrics.push(EpochMetrics {
            epoch: epoch + 1,
            lambda_eff,
            supervised_loss: sup_sum / steps as f64,
            unsupervised_loss: unsup_sum / steps as f64,
            train_accuracy: accuracy(&net, &data.labelled)?,
            test_accuracy: accuracy(&net, &data.test)?,
            mean_log_q: objective.mean_log_q(&net, &data.unlabelled)?,
        });
    }
    Ok(TrainOutcome { network: net, metrics })
}

/// `v ← μv + g + wd·w`, `w ← w − lr·v`.
pub(crate) fn sgd_step(
    net: &mut Network,
    velocity: &mut [Dense],
    grads: &[Dense],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    for ((layer, vel), g) in net.layers.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        let update = |w: &mut [f64], v: &mut [f64], g: &[f64], decay: f64| {
            for ((w, v), g) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = momentum * *v + g + decay * *w;
                *w -= lr * *v;
            }
        };
        update(&mut layer.weights, &mut vel.weights, &g.weights, weight_decay);
        update(&mut layer.bias, &mut vel.bias, &g.bias, 0.0);
    }
}
