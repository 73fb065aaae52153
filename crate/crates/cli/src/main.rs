use std::io::Write;
use std::process::ExitCode;

use cfdim_cli::{run, Cli, CliError};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, outcome) = match run(&cli) {
        Ok(done) => done,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code);
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError {
            code: cfdim_cli::EXIT_IO,
            message: format!("standard output: {e}"),
        }),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(e.code);
    }
    if let Some(message) = &outcome.message {
        eprintln!("{message}");
    }
    ExitCode::from(outcome.exit)
}
