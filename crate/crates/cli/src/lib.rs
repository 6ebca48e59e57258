//! Command implementations behind the `leadrig` binary.
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 resource limits
//! (search budget, enumeration limit), 4 oracle disagreement.

pub mod args;
pub mod commands;
pub mod report;

use std::fs;
use std::path::Path;

use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] leadrig::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("{0} disagreement(s) between closed forms and exhaustive search")]
    Mismatch(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(leadrig::Error::BudgetExhausted(_) | leadrig::Error::LimitExceeded { .. }) => 3,
            CliError::Core(_) | CliError::Usage(_) | CliError::Output { .. } => 2,
            CliError::Mismatch(_) => 4,
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Output { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Run one command, writing its report to the requested destination.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Robustness(a) => emit(&commands::cmd_robustness(a)?, a.output.output.as_deref()),
        Command::Summary(a) => emit(&commands::cmd_summary(a)?, a.output.output.as_deref()),
        Command::Compare(a) => emit(&commands::cmd_compare(a)?, a.output.output.as_deref()),
        Command::Bribery(a) => emit(&commands::cmd_bribery(a)?, a.output.as_deref()),
        Command::OracleCheck(a) => {
            let (text, mismatches) = commands::cmd_oracle_check(a)?;
            emit(&text, a.output.as_deref())?;
            if mismatches > 0 {
                return Err(CliError::Mismatch(mismatches));
            }
            Ok(())
        }
    }
}

/// Size the global worker pool from `LEADRIG_THREADS`, when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("LEADRIG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("LEADRIG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}
