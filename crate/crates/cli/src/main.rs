use std::process::ExitCode;

use clap::Parser;
use genmetric::app::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("genmetric: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
