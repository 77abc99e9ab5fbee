//! Runs a reduced DOA benchmark from a scenario file and prints the CSV.
//! The same engine backs the `nusml-bench` binary.
//!
//! cargo run --release --example monte_carlo [scenario.json]

use std::path::PathBuf;

use nusml::harness::{render_csv, run_doa_benchmark, BenchConfig};

fn main() -> nusml::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/doa_uncorrelated_snr.json")
    });
    let mut config = BenchConfig::from_path(&path)?;
    config.scenario.runs = 20;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_doa_benchmark(&config.doa_spec(workers)?)?;
    print!("{}", render_csv(&rows));
    Ok(())
}
