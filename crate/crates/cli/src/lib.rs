//! Command-line front end for `cgesurv`: CSV ingestion, fold assignment,
//! cross-validation, study files and the subcommands built on them.

pub mod commands;
pub mod crossval;
pub mod error;
pub mod folds;
pub mod ingest;
pub mod study;

use clap::Parser;

pub use error::{CliError, Result};

/// Size the worker pool from `CGESURV_THREADS`; results do not depend on it.
pub fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("CGESURV_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CGESURV_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

/// Parse `args`, run the command and return the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", CliError::Usage(first.trim_start_matches("error: ").to_string()).line());
            return 2;
        }
    };
    match init_threads().and_then(|()| commands::execute(cli)) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}
