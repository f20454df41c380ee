//! `qmimo` command-line front end.
//!
//! Every subcommand writes a CSV (or JSON) artifact into the output
//! directory together with a gnuplot script that renders it. Exit codes:
//! 0 success, 1 usage error, 2 failed check or unreachable target, 3 I/O.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::error::{CliError, EXIT_FAILED, EXIT_IO, EXIT_OK, EXIT_USAGE};

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::MseSweep(a) => commands::mse_sweep(a),
        Command::RateVsM(a) => commands::rate_vs_m(a),
        Command::Compensation(a) => commands::compensation(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(outcome) if outcome.warnings.is_empty() => EXIT_OK,
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            EXIT_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
