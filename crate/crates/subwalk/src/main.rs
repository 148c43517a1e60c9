//! Command-line front end: loads a TOML job file, applies flag overrides,
//! runs the job, and reports where the rows landed.
//!
//! Exit codes: 0 on success, 2 for configuration problems (unreadable or
//! unparsable job file, failed validation), 3 for runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use subwalk::{run_job, JobConfig, OutputFormat, Overrides, SolverError};

/// Runs Monte Carlo boundary-value jobs described by TOML config files.
#[derive(Parser, Debug)]
#[command(name = "subwalk", version)]
struct Cli {
    /// Path to the TOML job file.
    job: PathBuf,

    /// Override run.n_paths from the job file.
    #[arg(long)]
    paths: Option<u64>,

    /// Override run.dt from the job file.
    #[arg(long)]
    dt: Option<f64>,

    /// Override run.seed from the job file.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the worker count (also settable via SUBWALK_WORKERS).
    #[arg(long)]
    workers: Option<usize>,

    /// Override output.path from the job file.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override output.format from the job file.
    #[arg(long, value_parser = ["csv", "jsonl"])]
    format: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match JobConfig::from_path(&cli.job) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    cfg.apply_overrides(&Overrides {
        n_paths: cli.paths,
        dt: cli.dt,
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
        format: cli.format.as_deref().map(|f| {
            if f == "jsonl" {
                OutputFormat::Jsonl
            } else {
                OutputFormat::Csv
            }
        }),
    });
    match run_job(&cfg) {
        Ok(summary) => {
            println!("wrote {} rows to {}", summary.rows, summary.path.display());
            ExitCode::SUCCESS
        }
        Err(e @ SolverError::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
