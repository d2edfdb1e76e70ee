//! `salmon-kit`: builds multi-level salient-object ground truth and scores
//! saliency maps against it.

mod args;
mod commands;
mod error;
mod plot;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| run(&cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = commands::configure_workers(cli.workers)?;
    let ctx = commands::Ctx {
        exec,
        verbose: cli.verbose,
    };
    match &cli.command {
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::GtBuild(a) => commands::gt_build(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Characterize(a) => commands::characterize(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}
