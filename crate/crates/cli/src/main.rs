mod commands;
mod config;
mod ledger;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Context, EXIT_USAGE};
use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "delaycert", version, about = "Delay-robustness certification and simulation of predictor feedback")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files and the ledger (default: [output].dir or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep and selftest.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Decay rate, overrides [certification].kappa.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Bisection tolerance, overrides [certification].tol.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Largest certified delta with delta_star, delta_E and the small-gain bound.
    Certify,
    /// delta_E, delta_lmi and the small-gain bound over a D0 grid.
    Sweep,
    /// Closed-loop run; writes trajectory CSVs and a decay summary.
    Simulate,
    /// Scalar LMI verdicts against the brute-force grid oracle.
    Selftest,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if cli.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose().map_err(|e| {
        let path = cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        CliError::usage(format!("{path}: {e}"))
    })?;
    let ctx = Context {
        out_dir: commands::out_dir(cli.out.as_deref(), config.as_ref()),
        config,
        jobs: cli.jobs,
        kappa: cli.kappa,
        tol: cli.tol,
    };
    match cli.command {
        Command::Certify => commands::certify(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Selftest => commands::selftest(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
