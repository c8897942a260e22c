//! Semi-supervised learning with priors over predicted label distributions.
//!
//! - [`relaxations`]: per-sample unsupervised losses on the simplex.
//! - [`gaussmix`]: the induced density of the posterior for a 1-D two-Gaussian problem.
//! - [`logicc`]: rule parsing, DNF conversion and compiled rule relaxations.
//! - [`sslnet`]: a small network, its training objective and evaluation.
//! - [`synthdata`]: seeded synthetic tasks.

pub mod error;
pub mod gaussmix;
pub mod gradcheck;
pub mod logicc;
pub mod quad;
pub mod relaxations;
pub mod rng;
pub mod sslnet;
pub mod synthdata;

pub use error::{Error, Result};
pub use relaxations::{ProbVector, RelaxationKind, RelaxationSpec};
