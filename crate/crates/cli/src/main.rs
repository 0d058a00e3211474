use std::process::ExitCode;

use clap::Parser;
use kpzlab_cli::config::Cli;

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    ExitCode::from(kpzlab_cli::run(command, args))
}
