//! Command-line front end for the QANOVA library.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 configuration error,
//! 3 data error, 4 numeric error. The QANOVA_THREADS environment variable
//! caps the worker-thread count; results are identical for any value.

mod args;
mod commands;
mod errors;
mod ingest;
mod output;

use args::{Cli, Command};
use clap::Parser;
use errors::{CliError, CliResult};

fn configure_threads() -> CliResult<()> {
    if let Ok(raw) = std::env::var("QANOVA_THREADS") {
        let n: usize = raw.parse().map_err(|_| {
            CliError::config(format!("QANOVA_THREADS must be a positive integer, got '{raw}'"))
        })?;
        if n == 0 {
            return Err(CliError::config("QANOVA_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run() -> CliResult<()> {
    configure_threads()?;
    let cli = Cli::parse();
    let rendered = match cli.command {
        Command::Test(a) => commands::cmd_test(a)?,
        Command::Ci(a) => commands::cmd_ci(a)?,
        Command::Simulate(a) => commands::cmd_simulate(a)?,
        Command::Power(a) => commands::cmd_power(a)?,
        Command::Verify(a) => commands::cmd_verify(a)?,
    };
    rendered.emit()
}

fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
