//! Monte Carlo benchmark driver.
//!
//! ```text
//! nusml-bench doa-bench  --scenario s.json --out rmse.csv [--runs K] [--seed S] [--workers n] [--method sml-imlse]
//! nusml-bench enum-bench --scenario s.json --out enum.csv [--approach 1|2|3] [--runs K] [--seed S] [--workers n]
//! ```
//!
//! Exit status: 0 on success, 2 on configuration errors, 3 when more than
//! half of the runs at some sweep point failed numerically.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nusml::enumeration::Approach;
use nusml::harness::{self, BenchConfig, DoaVariant, ResultRow};
use nusml::Error;

#[derive(Parser)]
#[command(name = "nusml-bench", version, about = "Nonuniform-noise SML benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override the number of Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also write a gnuplot-ready table here.
    #[arg(long)]
    plotdata: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// RMSE of DOA estimates.
    DoaBench {
        #[command(flatten)]
        common: Common,
        /// sml-imlse, sml-noniter, dml-imlse or dml-noniter (default: all).
        #[arg(long)]
        method: Option<DoaVariant>,
    },
    /// Success counts of source enumeration.
    EnumBench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        approach: Option<Approach>,
    },
}

fn load(common: &Common) -> Result<BenchConfig, Error> {
    let mut cfg = BenchConfig::from_path(&common.scenario)?;
    if let Some(k) = common.runs {
        cfg.scenario.runs = k;
    }
    if let Some(s) = common.seed {
        cfg.scenario.base_seed = s;
    }
    cfg.scenario
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(Vec<ResultRow>, Common), Error> {
    match cli.command {
        Command::DoaBench { common, method } => {
            let cfg = load(&common)?;
            let mut spec = cfg.doa_spec(common.workers)?;
            if let Some(m) = method {
                spec.variants = vec![m];
            }
            Ok((harness::run_doa_benchmark(&spec)?, common))
        }
        Command::EnumBench { common, approach } => {
            let cfg = load(&common)?;
            let mut spec = cfg.enum_spec(common.workers)?;
            if let Some(a) = approach {
                spec.approaches = vec![a];
            }
            Ok((harness::run_enum_benchmark(&spec)?, common))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (rows, common) = match run(cli) {
        Ok(v) => v,
        Err(e @ (Error::Config(_) | Error::Json(_) | Error::Domain(_) | Error::Dimension(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = harness::emit_csv(&rows, &common.out) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if let Some(path) = &common.plotdata {
        if let Err(e) = harness::emit_plotdata(&rows, path) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let overloaded = rows.iter().any(|r| 2 * r.failures > r.runs + r.failures);
    if overloaded {
        eprintln!("error: more than half of the runs failed at some sweep point");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
