use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdt_cli::{parse_config, run_experiment};

#[derive(Parser)]
#[command(name = "sdt", version, about = "Coupled Stokes-Darcy flow and transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let Cli { command: Command::Run { config, out, quiet } } = Cli::parse();
    let cfg = match parse_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg, out.as_deref(), quiet) {
        Ok(outcome) => {
            println!("config sha256 {}", cfg.hash());
            for g in &outcome.gates {
                println!("{g}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
