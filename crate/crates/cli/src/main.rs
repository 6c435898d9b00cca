use std::process::ExitCode;

use clap::Parser;

use twofluid_cli::commands::{execute, Cli};
use twofluid_cli::error::EXIT_VALIDATION;

/// Sizes the global rayon pool from `TWOFLUID_THREADS`.
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("TWOFLUID_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("TWOFLUID_THREADS must be a positive integer (got '{value}')"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; that code is reserved for numerical aborts.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION);
        }
        Err(e) => e.exit(),
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
