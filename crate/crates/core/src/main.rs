use std::process::ExitCode;

use clap::Parser;
use satrelay::cli::{execute, Cli, EXIT_CONFIG};

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
