//! `fsim`: fit a single-index functional regression from files, evaluate a
//! saved fit on new observations, or run a replicated simulation study.
//!
//! Exit status is 0 exactly when no error diagnostic was emitted; warnings
//! (for example a fit that hit its iteration cap) leave the status at 0.

mod args;
mod commands;
mod error;
mod tables;

use clap::Parser;

use args::{Command, RunConfig};

fn main() {
    let run = RunConfig::parse();
    let outcome = match &run.command {
        Command::Fit(a) => commands::run_fit(a, run.verbose),
        Command::Predict(a) => commands::run_predict(a, run.verbose),
        Command::Simulate(a) => commands::run_simulate(a, run.verbose),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
