//! Command-line harness for the trajopt solvers and benchmark studies.
//!
//! Exit codes: 0 on success (including an exhausted iteration budget), 1 when
//! a solve stalls, diverges or fails at runtime, 2 for invalid usage or
//! configuration.

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod output;

pub use args::{Cli, Command};
pub use output::{format_number, sha256_hex, MANIFEST_NAME};

/// Invalid flags, config file contents or flag combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure,
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::run_solve(a),
        Command::Suite(a) => commands::run_suite(a),
        Command::Feedback(a) => commands::run_feedback(a),
        Command::Perturbation(a) => commands::run_perturbation(a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failure) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
