use std::process::ExitCode;

use clap::Parser;
use diffreg::cli::{main_with, Args};

fn main() -> ExitCode {
    main_with(Args::parse())
}
