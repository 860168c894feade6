//! Command-line front end for the `tracebounds` library.

pub mod args;
pub mod commands;
pub mod error;
pub mod matrix_file;
pub mod output;

pub use args::Cli;
pub use error::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        args::Command::Poly(cmd) => commands::poly::run(cmd),
        args::Command::Trace(args) => commands::trace::run(args),
        args::Command::Wishart(cmd) => commands::wishart::run(cmd),
        args::Command::Verify(args) => commands::verify::run(args),
    }
}

/// Sizes the global thread pool from `TRACEBOUNDS_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TRACEBOUNDS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("TRACEBOUNDS_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Compute(e.to_string()))
}
