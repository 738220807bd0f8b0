//! Configured experiment runs and their CSV/JSON artifacts.

mod config;
mod runners;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    to_point, ConfigError, Coord, ExperimentConfig, ExperimentKind, GapScanSettings, PointPair,
    SweepSettings, ThresholdGrid,
};
pub use runners::{
    format_point, recheck_gap_scan, recheck_preserves_certified, run_bounds, run_gap_scan, run_ke,
    run_sweep, run_thresholds, BoundsRow, GapRow, GapScan, KePairReport, KeRun, KeSummary,
};

use crate::error::{LabError, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::Precondition(format!("writing {}: {e}", path.display()))
}

/// Writes `rows` as an RFC 4180 CSV with a header from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    writeln!(w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// What a run produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
    /// Set when the metric solver stopped without converging.
    pub non_convergence: Option<String>,
}

impl RunSummary {
    fn merge(&mut self, other: RunSummary) {
        self.files.extend(other.files);
        self.violations.extend(other.violations);
        if self.non_convergence.is_none() {
            self.non_convergence = other.non_convergence;
        }
    }
}

#[derive(Serialize)]
struct SweepSummaryJson<'a> {
    domain: &'a crate::domain::DomainSpec,
    x: f64,
    y: f64,
    k2_constant: bool,
    l_monotone: bool,
    plateau: f64,
    ordering_violations: usize,
}

#[derive(Serialize)]
struct GapSummaryJson<'a> {
    level: &'a crate::domain::ExhaustionLevel,
    base: &'a str,
    delta: f64,
    s_max: f64,
    certified_rows: usize,
    heuristic_crossings: usize,
    recheck_preserved: Option<bool>,
}

/// Runs one experiment (or all of them) and writes its artifacts into `out`.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut summary = RunSummary::default();
    match kind {
        ExperimentKind::Thresholds => {
            let rows = run_thresholds(cfg)?;
            let path = out.join("thresholds.csv");
            write_csv(&path, &rows)?;
            summary.files.push(path);
        }
        ExperimentKind::Bounds => {
            let rows = run_bounds(cfg)?;
            for r in rows.iter().filter(|r| !r.ordering_ok) {
                summary
                    .violations
                    .push(format!("bounds pair {}: ordering c <= k3 <= k2 <= l broken", r.pair));
            }
            let path = out.join("bounds.csv");
            write_csv(&path, &rows)?;
            summary.files.push(path);
        }
        ExperimentKind::Sweep => {
            let (table, bad) = run_sweep(cfg)?;
            if bad > 0 {
                summary.violations.push(format!("sweep: {bad} rows break the bound ordering"));
            }
            let path = out.join("sweep.csv");
            write_csv(&path, &table.rows)?;
            summary.files.push(path);
            let path = out.join("sweep_summary.json");
            write_json(
                &path,
                &SweepSummaryJson {
                    domain: &cfg.domain,
                    x: cfg.sweep.x,
                    y: cfg.sweep.y,
                    k2_constant: table.k2_constant,
                    l_monotone: table.l_monotone,
                    plateau: table.plateau,
                    ordering_violations: bad,
                },
            )?;
            summary.files.push(path);
        }
        ExperimentKind::GapScan => {
            let scan = run_gap_scan(cfg)?;
            let recheck = scan.rows.first().and_then(|r| r.recheck_certified).map(|_| recheck_preserves_certified(&scan));
            if recheck == Some(false) {
                summary.violations.push("gap scan: a certified row was lost on recheck".into());
            }
            let path = out.join("gap_scan.csv");
            write_csv(&path, &scan.rows)?;
            summary.files.push(path);
            let path = out.join("gap_scan_summary.json");
            write_json(
                &path,
                &GapSummaryJson {
                    level: &scan.level,
                    base: &scan.base,
                    delta: scan.delta,
                    s_max: scan.s_max,
                    certified_rows: scan.rows.iter().filter(|r| r.certified).count(),
                    heuristic_crossings: scan.rows.iter().filter(|r| r.heuristic_crossing).count(),
                    recheck_preserved: recheck,
                },
            )?;
            summary.files.push(path);
        }
        ExperimentKind::Ke => {
            let run = run_ke(cfg)?;
            let name = if run.failure.is_some() { "ke_residual.csv" } else { "ke_grid.csv" };
            let path = out.join(name);
            let file = File::create(&path).map_err(|e| io_err(&path, e))?;
            run.grid.write_csv(BufWriter::new(file))?;
            summary.files.push(path);
            let path = out.join("ke_summary.json");
            write_json(&path, &run.summary)?;
            summary.files.push(path);
            summary.violations.extend(run.summary.violations.iter().cloned());
            summary.non_convergence = run.failure.map(|e| e.to_string());
        }
        ExperimentKind::All => {
            for k in [
                ExperimentKind::Thresholds,
                ExperimentKind::Bounds,
                ExperimentKind::Sweep,
                ExperimentKind::GapScan,
                ExperimentKind::Ke,
            ] {
                // the metric solver is two-dimensional only
                if k == ExperimentKind::Ke && cfg.domain.n != 2 {
                    continue;
                }
                summary.merge(run_experiment(k, cfg, out)?);
            }
        }
    }
    Ok(summary)
}
