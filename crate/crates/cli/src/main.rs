mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rerun { manifest } => config::load_manifest(manifest).and_then(|mut loaded| {
            loaded.common.out = cli.common.out.clone();
            output::dispatch(&loaded)
        }),
        _ => output::dispatch(&cli),
    };
    match result {
        Ok(dir) => {
            eprintln!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
