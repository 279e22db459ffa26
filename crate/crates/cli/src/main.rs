use std::process::ExitCode;

use clap::Parser;
use metatune_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.warnings > 0 {
                eprintln!(
                    "warning: {} points or cells were scored from impure leaves and are flagged in the output",
                    outcome.warnings
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
