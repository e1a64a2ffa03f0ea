use std::process::ExitCode;

use clap::Parser;
use minutekit_cli::app::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("minutekit: {e}");
            e.exit.code()
        }
    }
}
