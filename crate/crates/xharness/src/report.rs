//! Run reports and the files written for them.

use std::fmt::Write as _;
use std::path::Path;

use dssl_core::sslnet::{EpochMetrics, Evaluation, HISTOGRAM_BINS};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::ExperimentRun;
use crate::stats::Aggregate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub accuracy: f64,
    pub intermediate_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation_rate: Option<f64>,
    pub histogram: Vec<u64>,
}

impl From<&Evaluation> for SplitSummary {
    fn from(e: &Evaluation) -> Self {
        Self {
            accuracy: e.accuracy,
            intermediate_fraction: e.intermediate_fraction,
            violation_rate: e.violation_rate,
            histogram: e.histogram.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub test_accuracy: f64,
    pub epochs: usize,
    pub labelled: SplitSummary,
    pub unlabelled: SplitSummary,
    pub test: SplitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub test_accuracy: Aggregate,
    pub unlabelled_intermediate_fraction: Aggregate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_violation_rate: Option<Aggregate>,
}

/// Everything in `report.json`. Only `wall_clock_seconds` varies between
/// reruns of the same config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub method: String,
    pub seeds: Vec<SeedReport>,
    pub aggregates: Aggregates,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn from_run(run: &ExperimentRun) -> Self {
        let seeds: Vec<SeedReport> = run
            .seeds
            .iter()
            .map(|s| SeedReport {
                seed: s.seed,
                test_accuracy: s.evaluation.test.accuracy,
                epochs: s.metrics.len(),
                labelled: (&s.evaluation.labelled).into(),
                unlabelled: (&s.evaluation.unlabelled).into(),
                test: (&s.evaluation.test).into(),
            })
            .collect();
        let agg = |f: &dyn Fn(&SeedReport) -> Option<f64>| -> Option<Aggregate> {
            let values: Option<Vec<f64>> = seeds.iter().map(f).collect();
            values.and_then(|v| Aggregate::from_values(&v))
        };
        let aggregates = Aggregates {
            test_accuracy: agg(&|s| Some(s.test_accuracy)).expect("at least one seed"),
            unlabelled_intermediate_fraction: agg(&|s| Some(s.unlabelled.intermediate_fraction))
                .expect("at least one seed"),
            test_violation_rate: agg(&|s| s.test.violation_rate),
        };
        Self {
            config: run.config.clone(),
            method: run.config.method(),
            seeds,
            aggregates,
            wall_clock_seconds: run.wall_clock_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::ConfigSyntax {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Write via a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out =
        String::from("epoch,lambda_eff,supervised_loss,unsupervised_loss,train_accuracy,test_accuracy,mean_log_q\n");
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            m.epoch,
            m.lambda_eff,
            m.supervised_loss,
            m.unsupervised_loss,
            m.train_accuracy,
            m.test_accuracy,
            fmt_opt(m.mean_log_q)
        );
    }
    out
}

pub fn histogram_csv(counts: &[u64]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    let bins = counts.len().max(1) as f64;
    for (i, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{c}", i as f64 / bins, (i + 1) as f64 / bins);
    }
    out
}

/// `report.json` plus per-seed metric and histogram CSVs under `dir`.
pub fn write_run(run: &ExperimentRun, dir: &Path) -> Result<RunReport> {
    let report = RunReport::from_run(run);
    for s in &run.seeds {
        let seed_dir = dir.join(format!("seed_{}", s.seed));
        write_atomic(&seed_dir.join("metrics.csv"), &metrics_csv(&s.metrics))?;
        for (name, ev) in [
            ("labelled", &s.evaluation.labelled),
            ("unlabelled", &s.evaluation.unlabelled),
            ("test", &s.evaluation.test),
        ] {
            debug_assert_eq!(ev.histogram.len(), HISTOGRAM_BINS);
            write_atomic(
                &seed_dir.join(format!("hist_{name}.csv")),
                &histogram_csv(&ev.histogram),
            )?;
        }
    }
    write_atomic(&dir.join("report.json"), &report.to_json())?;
    Ok(report)
}

pub fn summary_line(report: &RunReport) -> String {
    let a = &report.aggregates;
    let mut line = format!(
        "{}: test accuracy {:.4} ± {:.4} over {} seeds, intermediate fraction {:.4}",
        report.method,
        a.test_accuracy.mean,
        a.test_accuracy.std_err,
        a.test_accuracy.n,
        a.unlabelled_intermediate_fraction.mean
    );
    if let Some(v) = &a.test_violation_rate {
        let _ = write!(line, ", violation rate {:.4}", v.mean);
    }
    line
}
