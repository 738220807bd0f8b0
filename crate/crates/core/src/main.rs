use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use intrinsic_lab::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use intrinsic_lab::LabError;

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NON_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "intrinsic-lab", version, about = "Bounds for intrinsic distances on Reinhardt domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_path` from the config (default `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every randomized search; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter windows for both theorems.
    Thresholds(Common),
    /// Lower and upper bounds for the configured point pairs.
    Bounds(Common),
    /// Bounds along a sweep of the product cap.
    Sweep(Common),
    /// Gap proxy along a diagonal ray in an exhaustion level.
    GapScan(Common),
    /// Solve for the Kähler-Einstein potential and run the metric checks.
    Ke(Common),
    /// Everything above.
    All(Common),
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("INTRINSIC_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("INTRINSIC_LAB_THREADS = {v:?} is not a thread count"))?;
    if n == 0 {
        return Err("INTRINSIC_LAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Thresholds(c) => (ExperimentKind::Thresholds, c),
        Command::Bounds(c) => (ExperimentKind::Bounds, c),
        Command::Sweep(c) => (ExperimentKind::Sweep, c),
        Command::GapScan(c) => (ExperimentKind::GapScan, c),
        Command::Ke(c) => (ExperimentKind::Ke, c),
        Command::All(c) => (ExperimentKind::All, c),
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut cfg = match ExperimentConfig::from_path(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = common
        .out
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    match run_experiment(kind, &cfg, &out) {
        Ok(summary) => {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            for v in &summary.violations {
                eprintln!("violation: {v}");
            }
            if let Some(msg) = &summary.non_convergence {
                eprintln!("error: {msg}");
                ExitCode::from(EXIT_NON_CONVERGENCE)
            } else if summary.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                LabError::NonConvergence { .. } | LabError::HessianLoss { .. } => EXIT_NON_CONVERGENCE,
                LabError::BracketViolation(_) | LabError::NoValidDisk(_) => EXIT_VIOLATION,
                _ => EXIT_CONFIG,
            })
        }
    }
}
