//! `madsmooth` command-line interface.
//!
//! Exit codes: 0 on success, 1 on input or configuration errors, 2 when no
//! link yields a feasible model.

use std::ffi::OsString;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod output;
pub mod svg;

pub use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NoFeasibleModel(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::NoFeasibleModel(_) => 2,
        }
    }
}

impl From<madsmooth::Error> for CliError {
    fn from(e: madsmooth::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("madsmooth: {e}");
            e.exit_code()
        }
    }
}
