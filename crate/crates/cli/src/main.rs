//! `etlsentry`: generate synthetic ETL streams, train the autoencoder detector,
//! score streams, evaluate detections, and run hyperparameter sweeps.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

mod commands;
mod failure;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Cli;
use crate::failure::Failure;
use crate::manifest::Invocation;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let cwd = match std::env::current_dir() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: cannot determine the working directory: {e}");
            return ExitCode::from(1);
        }
    };
    match commands::run(cli.command, Invocation { argv, cwd }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            if let Failure::Usage(_) = f {
                eprintln!("\nFor more information, try '--help'.");
            }
            ExitCode::from(f.exit_code())
        }
    }
}
