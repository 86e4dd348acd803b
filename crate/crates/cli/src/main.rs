use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gafz::{run, Command, ExperimentConfig, RunError, RunOptions};

/// Zero-count statistics of Gaussian Taylor series over a grid of radii.
#[derive(Parser)]
#[command(name = "gafz", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[mc] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `[output] dir`, then `gafz-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
    };
    let result = ExperimentConfig::load(&cli.config).and_then(|cfg| run(cli.command, cfg, &opts));
    match result {
        Ok(summary) => {
            for e in &summary.row_errors {
                eprintln!("gafz: {e}");
            }
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("gafz: {e}");
            ExitCode::from(RunError::exit_code(&e) as u8)
        }
    }
}
