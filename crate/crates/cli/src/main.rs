mod args;
mod commands;
mod dataset;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(cmd) => commands::cmd_fit(cmd, cli.verbose),
        Command::Simulate(cmd) => commands::cmd_simulate(cmd, cli.verbose),
        Command::Calibrate(cmd) => commands::cmd_calibrate(cmd, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gplm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
