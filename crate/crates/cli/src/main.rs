//! `stabsim` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration or domain error, 2 capacity
//! error, 3 bound violation found by `check`.

mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stabsim::bounds::{eval_bound, optimal_params, BoundReport, OptimalParams, TheoremId};
use stabsim::harness::{
    audit_bounds, run_sweep, run_sweep_to_dir, Axis, Experiment, ExperimentConfig, FitWindow, GridPoint, SweepOptions,
};
use stabsim::StabError;

#[derive(Parser)]
#[command(name = "stabsim", version, about = "Noise-stability experiments for local Hamiltonian simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// `dotted.key=value` overrides applied after loading, e.g. `trials=2`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> stabsim::Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config)?.with_overrides(&self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print bound reports for every grid point as JSON.
    Bounds {
        #[command(flatten)]
        config: ConfigArgs,
        /// Bound to evaluate; defaults to the configured ones.
        #[arg(long)]
        theorem: Option<TheoremId>,
    },
    /// Run a single trial and print its error sample as JSON.
    Trial {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Run a sweep into an output directory (resumable).
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Thread cap; overrides STABSIM_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Record wall-clock timings in results.csv.
        #[arg(long)]
        timings: bool,
    },
    /// Fit scaling exponents to results.csv and write fits.json.
    Fit {
        /// Sweep output directory.
        #[arg(long)]
        out: PathBuf,
        /// t, delta, n or lambda.
        #[arg(long, default_value = "t")]
        axis: Axis,
        /// all, auto, or a half-open index range `a:b`.
        #[arg(long, default_value = "auto", value_parser = parse_window)]
        window: FitWindow,
        /// Power of the log correction divided out of the means.
        #[arg(long, default_value_t = 0.0)]
        log_power: f64,
    },
    /// Run a sweep and audit every bound; exits 3 on violations.
    Check {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also persist the sweep here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write plot-data files (x, y, yerr, bound_rhs) from summary.json.
    Report {
        /// Sweep output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "t")]
        axis: Axis,
        /// Also draw a log-log SVG chart per series.
        #[arg(long)]
        svg: bool,
    },
}

fn parse_window(s: &str) -> Result<FitWindow, String> {
    match s {
        "all" => Ok(FitWindow::All),
        "auto" => Ok(FitWindow::Auto),
        _ => {
            let (a, b) = s.split_once(':').ok_or_else(|| format!("bad window {s:?}"))?;
            Ok(FitWindow::Range(a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?))
        }
    }
}

/// Failure carried to the exit code.
enum Failure {
    Lib(StabError),
    Violations(usize),
    Other(anyhow::Error),
}

impl From<StabError> for Failure {
    fn from(e: StabError) -> Self {
        Failure::Lib(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(k)) => {
            eprintln!("{k} bound violation(s)");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                StabError::Capacity(_) => 2,
                _ => 1,
            })
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[derive(Serialize)]
struct PointBounds {
    point: GridPoint,
    reports: Vec<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal: Option<OptimalParams>,
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    print_line(&serde_json::to_string_pretty(value)?)
}

/// Writes to stdout, treating a closed pipe as success.
fn print_line(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Bounds { config, theorem } => {
            let cfg = config.load()?;
            let ids = theorem.map(|t| vec![t]).unwrap_or_else(|| cfg.theorem_ids());
            let exp = Experiment::new(cfg)?;
            let l_cap = exp.ham.lattice.extent.iter().max().map(|&e| e as i64);
            let mut out = Vec::new();
            for pt in &exp.points {
                let params = exp.context(pt)?.bound_params()?;
                let reports = ids.iter().map(|&id| eval_bound(id, &params)).collect::<stabsim::Result<Vec<_>>>()?;
                let optimal = match ids.as_slice() {
                    [id @ (TheoremId::T2 | TheoremId::T3 | TheoremId::T7)] => optimal_params(*id, &params, l_cap).ok(),
                    _ => None,
                };
                out.push(PointBounds { point: *pt, reports, optimal });
            }
            print_json(&out)
        }
        Command::Trial { config, point, trial } => {
            let sample = stabsim::harness::run_trial(&config.load()?, point, trial)?;
            print_json(&sample)
        }
        Command::Sweep { config, out, threads, timings } => {
            let cfg = config.load()?;
            let result = run_sweep_to_dir(&cfg, &out, &SweepOptions { threads, record_timings: timings })?;
            let failed: usize = result.summaries.iter().map(|s| s.failures).sum();
            eprintln!("{} trials over {} points written to {}", result.records.len(), result.summaries.len(), out.display());
            if failed > 0 {
                eprintln!("{failed} trial(s) failed; see the flags column");
            }
            Ok(())
        }
        Command::Fit { out, axis, window, log_power } => {
            let fits = report::fit_csv(&out.join("results.csv"), axis, window, log_power)?;
            write_json(&out.join("fits.json"), &fits)?;
            print_json(&fits)
        }
        Command::Check { config, out, threads } => {
            let cfg = config.load()?;
            let opts = SweepOptions { threads, record_timings: false };
            let result = match &out {
                Some(dir) => run_sweep_to_dir(&cfg, dir, &opts)?,
                None => run_sweep(&cfg, &opts)?,
            };
            let audit = audit_bounds(&result);
            print_json(&audit)?;
            if audit.violations.is_empty() {
                Ok(())
            } else {
                Err(Failure::Violations(audit.violations.len()))
            }
        }
        Command::Report { out, axis, svg } => {
            let written = report::write_plot_data(&out, axis, svg)?;
            for path in written {
                print_line(&path.display().to_string())?;
            }
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
