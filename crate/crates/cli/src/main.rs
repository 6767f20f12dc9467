use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bvol_cli::Cli::parse();
    match bvol_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
