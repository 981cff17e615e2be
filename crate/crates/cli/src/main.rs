use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldes_cli::{run, Command, Overrides, RunOptions};

#[derive(Parser)]
#[command(name = "ldes", version, about = "Capacity expansion with long-duration storage under weather uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Train a policy and write policy.json
    Train(Flags),
    /// Simulate the trained policy in the output directory
    Simulate(Flags),
    /// Perfect-foresight and single-year benchmarks
    Bench(Flags),
    /// Autocorrelation test of the weather file
    Acf(Flags),
    /// Bid curves, price duration curve and level statistics of the trained policy
    Curves(Flags),
    /// Compare trained lower bound with the extensive form
    Oracle(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Wall-clock limit on training, seconds
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Train(f) => (Command::Train, f),
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Bench(f) => (Command::Bench, f),
        Sub::Acf(f) => (Command::Acf, f),
        Sub::Curves(f) => (Command::Curves, f),
        Sub::Oracle(f) => (Command::Oracle, f),
    };
    let options = RunOptions {
        config: flags.config,
        out: flags.out,
        overrides: Overrides {
            seed: flags.seed,
            max_iterations: flags.max_iterations,
            time_limit: flags.time_limit,
            threads: flags.threads,
        },
    };
    match run(command, &options) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
