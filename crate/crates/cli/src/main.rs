//! `rrde`: batch runner for reflected rough differential equation
//! experiments.
//!
//! Exit status: 0 when every enabled check passes, 1 when some invariant
//! check fails (each failure is named on stderr), 2 for an invalid config or
//! unusable inputs.

mod config;
mod error;
mod experiments;
mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Config, NamedExperiment};
use crate::error::CliError;
use crate::report::{ExperimentReport, Report, Status};

const DEFAULT_OUT: &str = "rrde-out";

#[derive(Debug, Parser)]
#[command(
    name = "rrde",
    version,
    about = "Reflected rough differential equation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiments of a config, writing report.json and CSV files.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `out`; default `rrde-out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant battery on every configured instance and print a
    /// JSON summary to stdout.
    Verify { config: PathBuf },
}

/// Runs `job` on every experiment concurrently, keeping config order.
fn run_all<F>(config: &Config, job: F) -> Result<Vec<ExperimentReport>, CliError>
where
    F: Fn(&NamedExperiment) -> Result<ExperimentReport, CliError> + Sync,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .experiments
            .iter()
            .map(|exp| scope.spawn(|| job(exp)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|panic| std::panic::resume_unwind(panic))
            })
            .collect()
    })
}

fn write_report(report: &Report, dir: &Path) -> Result<(), CliError> {
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn status_tag(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(config_path: &Path, out: Option<PathBuf>) -> Result<Report, CliError> {
    let config = Config::load(config_path)?;
    let out = out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out).map_err(|source| CliError::Output {
        path: out.display().to_string(),
        source,
    })?;
    let reports = run_all(&config, |exp| {
        experiments::run_experiment(exp, &config.base_dir, Some(&out))
    })?;
    let report = Report::new(reports);
    write_report(&report, &out)?;
    for e in &report.experiments {
        println!("[{}] {} ({})", status_tag(e.passed), e.name, e.experiment);
    }
    println!("report: {}", out.join("report.json").display());
    Ok(report)
}

fn verify(config_path: &Path) -> Result<Report, CliError> {
    let config = Config::load(config_path)?;
    let reports = run_all(&config, |exp| {
        verify::verify_experiment(exp, &config.base_dir)
    })?;
    let report = Report::new(reports);
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    for e in &report.experiments {
        for c in e.checks.iter().filter(|c| c.status == Status::ExpectedFail) {
            eprintln!("expected failure: {}/{}", e.name, c.name);
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Verify { config } => verify(&config),
    };
    match outcome {
        Ok(report) if report.passed => ExitCode::SUCCESS,
        Ok(report) => {
            for name in report.failures() {
                eprintln!("invariant check failed: {name}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
