use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dssl_core::gaussmix::GaussianMixture1D;
use xharness::compare::{comparison_table, run_comparison};
use xharness::config::ExperimentConfig;
use xharness::error::{HarnessError, Result};
use xharness::experiment::{default_jobs, run_experiment};
use xharness::gradcheck::{self, Fault};
use xharness::report::{summary_line, write_atomic, write_run};
use xharness::{density, rules};

#[derive(Parser)]
#[command(
    name = "dssl",
    version,
    about = "Semi-supervised learning experiments with deterministic priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds overriding the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one config over its seeds and write a report.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train several configs on the same data and tabulate them.
    Compare {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Finite-difference checks of every analytic gradient.
    Gradcheck {
        /// Scale the analytic gradient of this loss (self-test).
        #[arg(long)]
        fault: Option<String>,
        #[arg(long, default_value_t = 1.01)]
        fault_factor: f64,
    },
    /// Tabulate the density of p(y=1|x) for a 1-D two-Gaussian mixture.
    Density {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        mu0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        pi1: f64,
        #[arg(long, default_value_t = 999)]
        grid: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the DNF and valid label vectors of a rule file.
    CompileRules { rules: PathBuf },
    /// Write the dataset drawn for each seed as CSV.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

fn load(path: &Path, seeds: &Option<Vec<u64>>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seeds {
        cfg.seeds = s.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config, run } => {
            let cfg = load(&config, &run.seeds)?;
            let out = run.out.unwrap_or_else(|| cfg.output_dir.clone());
            let result = run_experiment(&cfg, run.jobs.unwrap_or_else(default_jobs))?;
            let report = write_run(&result, &out)?;
            println!("{}", summary_line(&report));
            println!("wrote {}", out.join("report.json").display());
        }
        Command::Compare { configs, run } => {
            let cfgs = configs
                .iter()
                .map(|p| load(p, &run.seeds))
                .collect::<Result<Vec<_>>>()?;
            let out = run.out.unwrap_or_else(|| cfgs[0].output_dir.clone());
            let reports = run_comparison(&cfgs, &out, run.jobs.unwrap_or_else(default_jobs))?;
            print!("{}", comparison_table(&reports));
        }
        Command::Gradcheck { fault, fault_factor } => {
            let fault = match fault {
                Some(loss) if !gradcheck::loss_names().contains(&loss) => {
                    return Err(HarnessError::config(
                        "fault",
                        format!(
                            "unknown loss `{loss}`; expected one of {}",
                            gradcheck::loss_names().join(", ")
                        ),
                    ));
                }
                Some(loss) => Some(Fault {
                    loss,
                    factor: fault_factor,
                }),
                None => None,
            };
            let results = gradcheck::run_all(fault.as_ref())?;
            for r in &results {
                println!("{r}");
            }
            if !results.iter().all(|r| r.passed()) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Density {
            mu0,
            mu1,
            sigma,
            pi1,
            grid,
            out,
        } => {
            let mix = GaussianMixture1D::new(mu0, mu1, sigma, pi1)?;
            let csv = density::density_csv(&mix, grid)?;
            match out {
                Some(path) => write_atomic(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::CompileRules { rules: path } => {
            let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            print!("{}", rules::describe(&text)?);
        }
        Command::GenData { config, out, seeds } => {
            let cfg = load(&config, &seeds)?;
            let prepared = cfg.prepare()?;
            for &seed in &cfg.seeds {
                let data = cfg
                    .dataset(&prepared, seed)
                    .map_err(|source| HarnessError::Seed { seed, source })?;
                let path = out.join(format!("seed_{seed}.csv"));
                write_atomic(&path, &data.to_csv())?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
