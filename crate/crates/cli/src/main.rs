use std::process::ExitCode;

use clap::Parser;
use gibbs_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match gibbs_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(gibbs_cli::CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
