use std::process::ExitCode;

use beamspace_lab::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamspace-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
