//! `pda`: generate block datasets, score and arrange them, train the LSTM
//! arranger, run the synthetic retention channel and compare solvers.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or codec
//! error, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod solve;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::{run, Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Parses `args` (including the program name), runs the command with output
/// on stdout and diagnostics on stderr, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { CliError::EXIT_USAGE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match run(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = out.flush();
    code
}
