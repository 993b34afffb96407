mod args;
mod commands;
mod report;

use args::{Cli, Command};
use clap::Parser;
use salmix::Error;
use std::process::ExitCode;

/// Process exit status for each outcome.
pub mod exit {
    pub const DIFFERENT: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const DATA: u8 = 3;
    pub const FIT_FAILED: u8 = 4;
    pub const NOT_CONVERGED: u8 = 5;
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => exit::USAGE,
        Error::Parse { .. } | Error::Data(_) | Error::Csv(_) | Error::Io(_) | Error::SchemaVersion { .. } | Error::Json(_) => exit::DATA,
        _ => exit::FIT_FAILED,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Study(a) => commands::study(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
