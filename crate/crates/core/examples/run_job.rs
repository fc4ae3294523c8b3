//! Runs a bundled job file into a temporary directory and lists the outputs.
//!
//! cargo run --example run_job -- crates/core/examples/example2_pipeline.json

use std::path::PathBuf;

use impulsive_iss::job::{run_job, RunOptions};

fn main() {
    let job = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/example1.json"));
    let out_dir = std::env::temp_dir().join("impulsive-iss-run-job");
    let outcome = run_job(
        &job,
        &RunOptions {
            out_dir,
            seed: 42,
            quiet: false,
        },
    );
    for path in &outcome.artifacts {
        let size = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
        println!("{} ({size} bytes)", path.display());
    }
    std::process::exit(outcome.exit_code);
}
