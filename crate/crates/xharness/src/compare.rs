//! Side-by-side runs of several configs on one dataset and seed list.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::run_experiment;
use crate::report::{write_atomic, write_run, RunReport};

const METHOD_ORDER: [&str; 6] = ["Supervised", "E", "X", "PL", "DP", "CompiledRules"];

fn method_rank(method: &str) -> usize {
    METHOD_ORDER
        .iter()
        .position(|m| *m == method)
        .unwrap_or(METHOD_ORDER.len())
}

/// Configs must share the dataset and the seed list.
pub fn check_comparable(configs: &[ExperimentConfig]) -> Result<()> {
    let Some(first) = configs.first() else {
        return Err(HarnessError::Mismatch("no configs given".into()));
    };
    for (i, c) in configs.iter().enumerate().skip(1) {
        if c.dataset != first.dataset {
            return Err(HarnessError::Mismatch(format!(
                "config {i} uses a different dataset than config 0"
            )));
        }
        if c.seeds != first.seeds {
            return Err(HarnessError::Mismatch(format!(
                "config {i} uses a different seed list than config 0"
            )));
        }
    }
    Ok(())
}

/// Rows sorted into canonical method order; ties keep input order.
pub fn sorted_reports(reports: &[RunReport]) -> Vec<&RunReport> {
    let mut rows: Vec<&RunReport> = reports.iter().collect();
    rows.sort_by_key(|r| method_rank(&r.method));
    rows
}

pub fn comparison_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(
        "method,name,seeds,test_accuracy_mean,test_accuracy_std_err,intermediate_fraction_mean,violation_rate_mean\n",
    );
    for r in sorted_reports(reports) {
        let a = &r.aggregates;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            r.config.name.as_deref().unwrap_or(""),
            a.test_accuracy.n,
            a.test_accuracy.mean,
            a.test_accuracy.std_err,
            a.unlabelled_intermediate_fraction.mean,
            a.test_violation_rate
                .as_ref()
                .map(|v| v.mean.to_string())
                .unwrap_or_default()
        );
    }
    out
}

pub fn comparison_table(reports: &[RunReport]) -> String {
    let header = ["method", "name", "test accuracy", "intermediate", "violations"];
    let rows: Vec<[String; 5]> = sorted_reports(reports)
        .into_iter()
        .map(|r| {
            let a = &r.aggregates;
            [
                r.method.clone(),
                r.config.name.clone().unwrap_or_else(|| "-".into()),
                format!("{:.4} ± {:.4}", a.test_accuracy.mean, a.test_accuracy.std_err),
                format!("{:.4}", a.unlabelled_intermediate_fraction.mean),
                a.test_violation_rate
                    .as_ref()
                    .map(|v| format!("{:.4}", v.mean))
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header.map(String::from));
    line(&widths.map(|w| "-".repeat(w)));
    for row in &rows {
        line(row);
    }
    out
}

/// Runs every config, writing `run_<i>_<method>/` plus the comparison files.
pub fn run_comparison(configs: &[ExperimentConfig], out: &Path, jobs: usize) -> Result<Vec<RunReport>> {
    check_comparable(configs)?;
    for c in configs {
        c.prepare()?;
    }
    let mut reports = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let run = run_experiment(c, jobs)?;
        reports.push(write_run(&run, &out.join(format!("run_{i}_{}", c.method())))?);
    }
    write_atomic(&out.join("comparison.csv"), &comparison_csv(&reports))?;
    write_atomic(&out.join("comparison.txt"), &comparison_table(&reports))?;
    Ok(reports)
}
