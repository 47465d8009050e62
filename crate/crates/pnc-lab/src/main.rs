use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pnc_lab::config::parse_config;
use pnc_lab::experiments::run_to_file;
use pnc_lab::report::verify;

/// Physical-layer network coding experiments: analytic rate curves,
/// two-way relay simulations, and compute-and-forward sweeps.
#[derive(Parser)]
#[command(name = "pnc-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its CSV.
    Run {
        /// Path to a `key = value` config file.
        config: PathBuf,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare a fresh result file against a golden one.
    Verify {
        golden: PathBuf,
        fresh: PathBuf,
        /// Tolerance for analytic columns.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("pnc-lab: cannot read {}: {}", config.display(), e);
                    return ExitCode::from(2);
                }
            };
            let parsed = match parse_config(&text) {
                Ok(parsed) => parsed,
                Err(e) => {
                    eprintln!("pnc-lab: {}: {}", config.display(), e);
                    return ExitCode::from(2);
                }
            };
            match run_to_file(&parsed, out.as_deref(), seed) {
                Ok(report) => {
                    for warning in &report.warnings {
                        println!("warning: {}", warning);
                    }
                    println!(
                        "{}: wrote {} rows to {}",
                        report.experiment.name(),
                        report.rows,
                        report.output.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("pnc-lab: {}", e);
                    ExitCode::from(1)
                }
            }
        }
        Command::Verify { golden, fresh, tol } => match verify(&golden, &fresh, tol) {
            Ok(true) => {
                println!("verify: PASS");
                ExitCode::SUCCESS
            }
            Ok(false) => {
                println!("verify: FAIL");
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("pnc-lab: {}", e);
                ExitCode::from(2)
            }
        },
    }
}
