use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = pseudomix::cli::Cli::parse();
    match pseudomix::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
