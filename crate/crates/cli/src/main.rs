//! `semreg` command-line front end.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, invalid
//! configuration or arguments) and 2 for data errors (unreadable or
//! malformed files, degenerate inputs).

mod args;
mod commands;
mod input;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// Failure of a subcommand, already classified by exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl From<semreg_core::Error> for Failure {
    fn from(e: semreg_core::Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

fn thread_count() -> CmdResult<usize> {
    match std::env::var("SEMREG_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("SEMREG_THREADS must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> CmdResult {
    let threads = thread_count()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    commands::dispatch(cli)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
