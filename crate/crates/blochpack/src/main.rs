use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    blochpack::cli::main_with(blochpack::cli::Cli::parse())
}
