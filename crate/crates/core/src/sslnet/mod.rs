//! Feed-forward networks with softmax or per-attribute sigmoid heads, and
//! their semi-supervised training objective.

mod kernel;
mod network;
mod objective;
mod train;

pub use kernel::{log_sum_exp_row, sigmoid, softmax_rows, softplus, Activation, Dense, Matrix};
pub use network::{AttributeParam, Head, Network, Prediction};
pub use objective::{LossBreakdown, Objective, TrainConfig, UnsupervisedPrior};
pub use train::{
    evaluate, evaluate_splits, train, true_label_confidence, EpochMetrics, Evaluation, SplitEvaluation, TrainOutcome,
    HISTOGRAM_BINS, INTERMEDIATE_BAND,
};
