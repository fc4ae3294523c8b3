use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use impulsive_iss::job::{run_job, RunOptions};

/// Run a batch job of simulation, certification, dwell-time and composition tasks.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Job file (JSON)
    #[arg(long)]
    job: PathBuf,
    /// Directory receiving the task outputs
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for sampling impulse sequences
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suppress per-task progress lines
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = run_job(
        &args.job,
        &RunOptions {
            out_dir: args.out_dir,
            seed: args.seed,
            quiet: args.quiet,
        },
    );
    ExitCode::from(outcome.exit_code as u8)
}
