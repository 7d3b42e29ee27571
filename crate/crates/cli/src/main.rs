//! `qweight`: synthesize data, featurize records, cross-validate the
//! classifier with or without RL sample weighting, and compare runs.

mod args;
mod commands;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use qweight::harness::TrackingAllocator;
use qweight::Error;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
        Error::Parse { .. } | Error::Schema(_) | Error::Format(_) | Error::Dimension(_) | Error::Io(_) => 3,
        Error::Invariant(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
