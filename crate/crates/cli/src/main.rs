//! `maskfeat` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 IO or file format, 3 invalid input or
//! statistics, 4 mask sampler gave up below the target ratio.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use maskfeat::Error;

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Format { .. } => 2,
        Error::InvalidInput(_) | Error::InvalidStats(_) => 3,
        Error::PartialMask { .. } => 4,
    }
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
    let result = match &cli.command {
        Command::Hog(a) => commands::hog(a),
        Command::Mask(a) => commands::mask(a),
        Command::MaskInfo(a) => commands::mask_info(a),
        Command::MakeSample(a) => commands::make_sample(a),
        Command::TrainToy(a) => commands::train_toy(a),
        Command::RenderHog(a) => commands::render_hog(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
