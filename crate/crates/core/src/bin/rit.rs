use std::process::ExitCode;

use clap::Parser;
use rit::cli::{execute, Cli};

fn main() -> ExitCode {
    // clap exits with status 2 on bad flags
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
