use std::process::ExitCode;

use clap::Parser;
use leadrig_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = leadrig_cli::configure_threads().and_then(|()| leadrig_cli::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("leadrig: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
