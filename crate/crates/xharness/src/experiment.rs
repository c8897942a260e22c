//! Runs one config over its seed list.

use std::num::NonZeroUsize;
use std::sync::Mutex;
use std::time::Instant;

use dssl_core::sslnet::{evaluate_splits, train, EpochMetrics, Network, SplitEvaluation, TrainConfig};

use crate::config::{ExperimentConfig, Prepared};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: Vec<EpochMetrics>,
    pub evaluation: SplitEvaluation,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    /// Ordered as in `config.seeds`.
    pub seeds: Vec<SeedRun>,
    pub wall_clock_seconds: f64,
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1)
}

/// Seed `s` fixes the dataset draw, the initial weights and the batch order.
pub fn run_seed(config: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<SeedRun> {
    let wrap = |source| HarnessError::Seed { seed, source };
    let data = config.dataset(prepared, seed).map_err(wrap)?;
    let net = Network::init(&prepared.sizes, config.model.activation, config.model.head, seed).map_err(wrap)?;
    let train_cfg = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let objective = prepared.objective_for(&train_cfg, config.model.head).map_err(wrap)?;
    let outcome = train(net, &data, &objective).map_err(wrap)?;
    let evaluation = evaluate_splits(&outcome.network, &data, prepared.valid.as_ref()).map_err(wrap)?;
    Ok(SeedRun {
        seed,
        metrics: outcome.metrics,
        evaluation,
    })
}

/// Validates, then trains every seed on up to `jobs` threads.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentRun> {
    let prepared = config.prepare()?;
    let start = Instant::now();
    let slots: Vec<Mutex<Option<Result<SeedRun>>>> = config.seeds.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    let workers = jobs.clamp(1, config.seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("queue lock");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(&seed) = config.seeds.get(i) else { break };
                let out = run_seed(config, &prepared, seed);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    let seeds = slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every seed ran"))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentRun {
        config: config.clone(),
        seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
