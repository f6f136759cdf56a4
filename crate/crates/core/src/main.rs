use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wheeldrone::cli;

#[derive(Parser)]
#[command(name = "wheeldrone", version, about = "Drive-and-fly MPPI planning for a two-wheeled drone")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired runs with and without the auxiliary prior.
    Ablation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and print the derived parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Also write the fully resolved configuration here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run { config, seed, out } => cli::cmd_run(&config, seed, out),
        Command::Ablation { config, seeds, out } => cli::cmd_ablation(&config, seeds, out),
        Command::Validate { config, emit } => cli::cmd_validate(&config, emit),
    };
    ExitCode::from(code as u8)
}
