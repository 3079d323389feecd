use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use secintent_cli::{cmd_metrics, cmd_run, cmd_validate, RunManifest};

/// Intent-driven security configuration for a simulated RAN fleet.
#[derive(Parser)]
#[command(name = "secintent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate Turtle intent files.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run the closed loop over a scenario and write reports.
    Run {
        /// Scenario directory or scenario.json file.
        #[arg(long)]
        scenario: PathBuf,
        /// Intent files; bare names are looked up in corpus/intents.
        #[arg(long, required = true, num_args = 1..)]
        intents: Vec<PathBuf>,
        #[arg(long, default_value = "catalog/controls.json")]
        catalog: PathBuf,
        #[arg(long, default_value = "config/level_mapping.json")]
        mapping: PathBuf,
        #[arg(long, default_value_t = 200)]
        ticks: u64,
        /// Overrides the seed stored in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print attack surface and security control coverage per NF.
    Metrics {
        inventory: PathBuf,
        expected_set: PathBuf,
        #[arg(long, default_value = "catalog/controls.json")]
        catalog: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SECINTENT_LOG", "warn")).init();
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    let code = match cli.command {
        Command::Validate { files } => cmd_validate(&files, &mut out),
        Command::Run { scenario, intents, catalog, mapping, ticks, seed, out: dir } => {
            let manifest = RunManifest { scenario, intents, catalog, mapping, ticks, seed, out: dir };
            cmd_run(&manifest, &mut out)
        }
        Command::Metrics { inventory, expected_set, catalog, json } => {
            cmd_metrics(&inventory, &expected_set, &catalog, json, &mut out)
        }
    };
    ExitCode::from(code as u8)
}
