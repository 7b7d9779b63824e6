use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pdfade::config::{parse_config_with, Command, Overrides};
use pdfade::outage::ApproxMethod;

/// Rate allocation between erasure and channel coding over block-Rayleigh fading.
#[derive(Parser, Debug)]
#[command(name = "pd-fade-opt", version)]
struct Args {
    /// point | optimize | sweep-rate | sweep-power | trajectory | validate-mc
    command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Approx1 | Approx2 | Approx3 | Approx4 | MonteCarlo
    #[arg(long)]
    method: Option<ApproxMethod>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides {
        command: Some(args.command),
        output: args.out,
        seed: args.seed,
        trials: args.trials,
        method: args.method,
    };
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pdfade::cli::run(&cfg) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if cfg.output.is_some() {
                println!("{}", outcome.summary);
            } else {
                eprintln!("{}", outcome.summary);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
