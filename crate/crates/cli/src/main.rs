//! `outflow --config run.toml [--scenario S] [--dim D] [--resolution N] [--tol T] [--out DIR]`

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use outflow_core::scenario::{run_scenario, Overrides, RunConfig, Scenario};
use outflow_core::Error;

#[derive(Debug, Parser)]
#[command(name = "outflow", version, about = "Stationary outflow through a curved boundary")]
struct Cli {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// profile | steady | stability | contraction | verify
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    dim: Option<u8>,
    /// Normal node count; tangential axes get half as many.
    #[arg(long)]
    resolution: Option<usize>,
    /// Steady-state tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "OUTFLOW_THREADS")]
    threads: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Config(_) | Error::NotSupersonic { .. } | Error::WrongSign(_) => 2,
        Error::NoStationaryProfile { .. } => 3,
        Error::NotConverging { .. } => 4,
        Error::CflViolation { .. } => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("outflow: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("outflow: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    cfg.apply(&Overrides {
        scenario: cli.scenario,
        dim: cli.dim.map(usize::from),
        resolution: cli.resolution,
        tol: cli.tol,
        output_dir: cli.out,
    });
    match run_scenario(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("outflow: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
