//! `calimetr` command-line frontend.
//!
//! Exit codes: 0 on success, 1 for data errors, 2 for usage errors.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::CliError;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("calimetr: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("calimetr: usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            eprintln!("calimetr: {e}");
            ExitCode::from(1)
        }
    }
}
