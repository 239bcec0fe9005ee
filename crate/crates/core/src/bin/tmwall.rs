use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tmwall::cli::{execute, Cli};

fn main() -> ExitCode {
    let outcome = execute(&Cli::parse());
    for line in &outcome.stderr {
        eprintln!("{line}");
    }
    print!("{}", outcome.stdout);
    let _ = std::io::stdout().flush();
    ExitCode::from(outcome.code as u8)
}
