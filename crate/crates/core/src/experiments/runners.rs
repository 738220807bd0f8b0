//! The experiment drivers. Each returns in-memory tables; writing happens in `output`.

use num_complex::Complex64;
use serde::Serialize;

use super::config::{to_point, ExperimentConfig};
use crate::caratheodory::{best_lower_bound, caratheodory_on_exhaustion};
use crate::certificate::{BoundCertificate, Witness};
use crate::domain::{theorem_a_window, theorem_b_window, DomainPoint, DomainSpec, ExhaustionLevel, ThresholdReport};
use crate::error::{LabError, Result};
use crate::kahler_einstein::{
    eq5_check, infinitesimal_comparison, ke_bracket, solve_ke_outcome, volume_determinant_check,
    BracketReport, Eq5Report, InfinitesimalReport, MetricGrid, VolumeReport,
};
use crate::kobayashi::{chain_ladder, epsilon_sweep, lempert_on_exhaustion, OptConfig, SweepTable, WaypointStrategy};

/// Compact text form of a point: coordinates separated by spaces, `re` or `re+imi`.
pub fn format_point(p: &DomainPoint) -> String {
    p.coords
        .iter()
        .map(|c| {
            if c.im == 0.0 {
                format!("{}", c.re)
            } else {
                format!("{}{:+}i", c.re, c.im)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn value_or_inf(c: &Option<BoundCertificate>) -> f64 {
    c.as_ref().map_or(f64::INFINITY, BoundCertificate::value)
}

/// Window rows for every Theorem A and Theorem B parameter combination in the grid.
pub fn run_thresholds(cfg: &ExperimentConfig) -> Result<Vec<ThresholdReport>> {
    let g = &cfg.thresholds;
    let mut rows = Vec::new();
    for &n in &g.a_n {
        for &r in &g.a_r {
            for &e in &g.a_epsilon {
                rows.push(theorem_a_window(n, r, e)?);
            }
        }
    }
    for &n in &g.b_n {
        for &r in &g.b_r {
            rows.push(theorem_b_window(n, r)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub pair: usize,
    pub x: String,
    pub y: String,
    pub c_lb: f64,
    pub c_witness: String,
    pub l_ub: f64,
    pub k2_ub: f64,
    pub k3_ub: f64,
    pub k_witness: String,
    /// `c_lb ≤ k3_ub ≤ k2_ub ≤ l_ub`.
    pub ordering_ok: bool,
}

fn bounds_for_pair(
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &ExperimentConfig,
) -> Result<(BoundCertificate, Vec<Option<BoundCertificate>>)> {
    let c = best_lower_bound(spec, x, y, &cfg.family_config)?;
    let ladder = chain_ladder(spec, 3, x, y, &WaypointStrategy::Axis, &cfg.opt_config)?;
    Ok((c, ladder))
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    let spec = &cfg.domain;
    let mut rows = Vec::with_capacity(cfg.points.len());
    for (k, pair) in cfg.points.iter().enumerate() {
        let (x, y) = pair.points();
        let (c, ladder) = bounds_for_pair(spec, &x, &y, cfg)?;
        let (l, k2, k3) = (value_or_inf(&ladder[0]), value_or_inf(&ladder[1]), value_or_inf(&ladder[2]));
        let c_lb = c.value();
        rows.push(BoundsRow {
            pair: k,
            x: format_point(&x),
            y: format_point(&y),
            c_lb,
            c_witness: c.witness_name(),
            l_ub: l,
            k2_ub: k2,
            k3_ub: k3,
            k_witness: ladder[2].as_ref().map_or("none".into(), BoundCertificate::witness_name),
            ordering_ok: c_lb <= k3 && k3 <= k2 && k2 <= l,
        });
    }
    Ok(rows)
}

/// The sweep table and the number of rows breaking `c_lb ≤ k3 ≤ k2 ≤ l`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(SweepTable, usize)> {
    let n = cfg.domain.n;
    let s = &cfg.sweep;
    let mut xs = vec![s.x; n];
    xs[n - 1] = 0.0;
    let mut ys = vec![s.y; n];
    ys[0] = 0.0;
    let (x, y) = (DomainPoint::from_real(&xs), DomainPoint::from_real(&ys));
    let table = epsilon_sweep(&cfg.domain, &x, &y, &s.epsilons, &cfg.opt_config)?;
    let violations = table
        .rows
        .iter()
        .filter(|r| !(r.c_lb <= r.k3_ub && r.k3_ub <= r.k2_ub && r.k2_ub <= r.l_ub))
        .count();
    Ok((table, violations))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub index: usize,
    /// Diagonal offset `s` with `x = p + s (1,…,1)`.
    pub s: f64,
    pub x: String,
    pub c_lb: f64,
    pub k_ub: f64,
    /// `(1 + δ) c_lb - k_ub`.
    pub proxy: f64,
    /// Positive proxy with both bounds certified.
    pub certified: bool,
    /// The proxy changed sign since the previous row; a heuristic hint only.
    pub heuristic_crossing: bool,
    pub recheck_k_ub: Option<f64>,
    pub recheck_certified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapScan {
    pub level: ExhaustionLevel,
    pub base: String,
    pub delta: f64,
    /// Offset where the diagonal ray leaves `S_l`.
    pub s_max: f64,
    pub rows: Vec<GapRow>,
}

fn shifted(p: &DomainPoint, s: f64) -> DomainPoint {
    DomainPoint::new(p.coords.iter().map(|c| c + Complex64::new(s, 0.0)).collect())
}

fn exit_offset(level: &ExhaustionLevel, p: &DomainPoint, big_r: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 2.0 * big_r + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if level.contains(&shifted(p, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn run_gap_scan(cfg: &ExperimentConfig) -> Result<GapScan> {
    let spec = &cfg.domain;
    let g = &cfg.gap_scan;
    let level = ExhaustionLevel::standard(spec, g.level)?;
    let p = g.base.as_deref().map_or_else(|| DomainPoint::origin(spec.n), to_point);
    spec.check_dim(&p)?;
    if !level.contains(&p) {
        return Err(LabError::InvalidParameter(format!(
            "base point ({}) is outside the exhaustion level {}",
            format_point(&p),
            g.level
        )));
    }
    let s_max = exit_offset(&level, &p, spec.big_r);
    let mut rows: Vec<GapRow> = Vec::with_capacity(g.steps);
    for k in 1..=g.steps {
        let s = s_max * k as f64 / (g.steps + 1) as f64;
        let x = shifted(&p, s);
        let c = caratheodory_on_exhaustion(&level, spec, &p, &x, &cfg.family_config)?.value();
        let k_ub = lempert_on_exhaustion(spec, &level, &p, &x, &cfg.opt_config)?.value();
        let proxy = (1.0 + cfg.delta) * c - k_ub;
        let heuristic_crossing = rows
            .last()
            .is_some_and(|prev| prev.proxy.is_finite() && proxy.is_finite() && (prev.proxy > 0.0) != (proxy > 0.0));
        rows.push(GapRow {
            index: k,
            s,
            x: format_point(&x),
            c_lb: c,
            k_ub,
            proxy,
            certified: proxy > 0.0 && k_ub.is_finite(),
            heuristic_crossing,
            recheck_k_ub: None,
            recheck_certified: None,
        });
    }
    let mut scan = GapScan {
        level,
        base: format_point(&p),
        delta: cfg.delta,
        s_max,
        rows,
    };
    if g.recheck_factor > 0 {
        recheck_gap_scan(cfg, &mut scan, g.recheck_factor)?;
    }
    Ok(scan)
}

/// Recomputes `k_ub` with `factor` times the Lempert starts and records whether each row
/// stays certified.
pub fn recheck_gap_scan(cfg: &ExperimentConfig, scan: &mut GapScan, factor: usize) -> Result<()> {
    let spec = &cfg.domain;
    let p = cfg
        .gap_scan
        .base
        .as_deref()
        .map_or_else(|| DomainPoint::origin(spec.n), to_point);
    let heavy = OptConfig {
        starts: cfg.opt_config.starts * factor.max(1),
        ..cfg.opt_config.clone()
    };
    for row in &mut scan.rows {
        let x = shifted(&p, row.s);
        let k_ub = lempert_on_exhaustion(spec, &scan.level, &p, &x, &heavy)?.value();
        let proxy = (1.0 + cfg.delta) * row.c_lb - k_ub;
        row.recheck_k_ub = Some(k_ub);
        row.recheck_certified = Some(proxy > 0.0 && k_ub.is_finite());
    }
    Ok(())
}

/// Every row certified in the first pass is still certified after the recheck.
pub fn recheck_preserves_certified(scan: &GapScan) -> bool {
    scan.rows
        .iter()
        .filter(|r| r.certified)
        .all(|r| r.recheck_certified == Some(true))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KePairReport {
    pub x: String,
    pub y: String,
    pub c_lb: f64,
    pub c_witness: String,
    pub k_ub: f64,
    pub infinitesimal: Option<InfinitesimalReport>,
    pub bracket: Option<BracketReport>,
    pub bracket_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeSummary {
    pub domain: DomainSpec,
    pub resolution: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_log_residual: f64,
    pub origin_metric: [f64; 2],
    pub origin_margin: f64,
    pub eq5: Option<Eq5Report>,
    pub volume: Option<VolumeReport>,
    pub pairs: Vec<KePairReport>,
    pub violations: Vec<String>,
}

/// Solved grid plus summary. On non-convergence the grid is the last iterate and
/// `failure` carries the error.
pub struct KeRun {
    pub grid: MetricGrid,
    pub summary: KeSummary,
    pub failure: Option<LabError>,
}

pub fn run_ke(cfg: &ExperimentConfig) -> Result<KeRun> {
    let spec = &cfg.domain;
    let out = solve_ke_outcome(spec, &cfg.grid_config, None)?;
    let grid = out.grid;
    let mut summary = KeSummary {
        domain: *spec,
        resolution: cfg.grid_config.resolution,
        converged: out.failure.is_none(),
        iterations: grid.iterations,
        max_log_residual: grid.max_log_residual,
        origin_metric: grid.origin_metric,
        origin_margin: grid.origin_margin,
        eq5: None,
        volume: None,
        pairs: Vec::new(),
        violations: Vec::new(),
    };
    if out.failure.is_some() {
        return Ok(KeRun {
            grid,
            summary,
            failure: out.failure,
        });
    }
    let eq5 = eq5_check(&grid, spec.big_r);
    if !eq5.passed {
        summary.violations.push(format!("eq5: sqrt(omega_11) = {} below {}", eq5.sqrt_omega_11, eq5.bound));
    }
    let volume = volume_determinant_check(&grid.origin_metric, grid.origin_margin, 2, spec.r, spec.epsilon)?;
    if volume.applicable && !volume.passed {
        summary.violations.push(format!("volume: {} exceeds {}", volume.lhs, volume.rhs));
    }
    summary.eq5 = Some(eq5);
    summary.volume = Some(volume);
    for pair in &cfg.points {
        let (x, y) = pair.points();
        let (c, ladder) = bounds_for_pair(spec, &x, &y, cfg)?;
        let k_cert = ladder[2]
            .clone()
            .unwrap_or_else(|| BoundCertificate::upper(f64::INFINITY, Witness::Trivial, 0.0));
        let infinitesimal = match &c.witness {
            Witness::Map(m) => Some(infinitesimal_comparison(&grid, m, &x, 8, cfg.family_config.seed)?),
            _ => None,
        };
        if let Some(inf) = &infinitesimal {
            if !inf.all_hold {
                summary.violations.push(format!(
                    "infinitesimal comparison at ({}) fails by {}",
                    format_point(&x),
                    -inf.min_margin
                ));
            }
        }
        let (bracket, bracket_error) = match ke_bracket(&grid, &x, &y, &c, &k_cert) {
            Ok(b) => (Some(b), None),
            Err(e @ LabError::BracketViolation(_)) => {
                summary.violations.push(e.to_string());
                (None, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
        summary.pairs.push(KePairReport {
            x: format_point(&x),
            y: format_point(&y),
            c_lb: c.value(),
            c_witness: c.witness_name(),
            k_ub: k_cert.value(),
            infinitesimal,
            bracket,
            bracket_error,
        });
    }
    Ok(KeRun {
        grid,
        summary,
        failure: None,
    })
}
