//! Command-line front end: argument definitions, typed reports and their
//! plain, CSV and JSON renderings.

pub mod args;
pub mod report;
pub mod run;

use std::fmt;
use std::path::Path;

pub use args::{Cli, Format};
pub use report::Report;
pub use run::{execute, Outcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {err}", path.display()) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Exit code for a library error: 2 for input the theory or the budget
/// rules out, 3 when a solver fails on valid input.
pub fn exit_code(e: &cfdim_core::Error) -> u8 {
    use cfdim_core::Error::*;
    match e {
        InvalidDigit { .. }
        | BudgetExceeded { .. }
        | InvalidParameter(_)
        | Divergence { .. }
        | Regime(_)
        | Threshold { .. }
        | DegenerateRange { .. }
        | GeometryTooLarge { .. } => EXIT_INVALID,
        NumericFailure { .. } | Bracket { .. } | Pole(_) => EXIT_SOLVER,
    }
}

impl From<cfdim_core::Error> for CliError {
    fn from(e: cfdim_core::Error) -> Self {
        Self { code: exit_code(&e), message: e.to_string() }
    }
}

/// Runs a parsed command line and renders its report.
pub fn run(cli: &Cli) -> Result<(String, Outcome), CliError> {
    let outcome = execute(&cli.command)?;
    Ok((outcome.report.render(cli.format), outcome))
}
