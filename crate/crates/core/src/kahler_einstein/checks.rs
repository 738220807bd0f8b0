//! Comparison inequalities between the solved metric, holomorphic maps and reference metrics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance::{ke_distance_estimate, metric_value};
use super::solver::MetricGrid;
use crate::caratheodory::HolMapToDisk;
use crate::certificate::BoundCertificate;
use crate::domain::DomainPoint;
use crate::error::{LabError, Result};

/// Lower Ricci bound `K1` of the source and negative upper curvature bound `K2` of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub k1: f64,
    pub k2: f64,
}

impl CurvatureBounds {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k2 < 0.0) || !k1.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "curvature bounds need finite K1 and K2 < 0, got ({k1}, {k2})"
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn ratio(&self) -> f64 {
        self.k1 / self.k2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq5Report {
    pub omega_11: f64,
    pub sqrt_omega_11: f64,
    /// `1/R²`, the stated lower bound.
    pub bound: f64,
    /// `√2/R`, the value for the polydisk of radius R.
    pub polydisk_value: f64,
    pub margin: f64,
    pub passed: bool,
}

/// `√ω(0)(X1, X̄1) ≥ 1/R²` up to the solver margin.
pub fn eq5_check(grid: &MetricGrid, big_r: f64) -> Eq5Report {
    let omega = grid.origin_metric[0];
    let sqrt = omega.max(0.0).sqrt();
    let bound = 1.0 / (big_r * big_r);
    // error of √ω from the error of ω
    let margin = grid.origin_margin / (2.0 * sqrt.max(1e-300));
    Eq5Report {
        omega_11: omega,
        sqrt_omega_11: sqrt,
        bound,
        polydisk_value: 2f64.sqrt() / big_r,
        margin,
        passed: sqrt >= bound - margin,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub n: usize,
    /// False when `ε < rⁿ`; nothing is asserted then.
    pub applicable: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
    pub diagonal_lhs: f64,
    pub diagonal_rhs: f64,
}

/// `2ⁿ Π ω(0)(X_j, X̄_j) ≤ 2^(2n+1) n / r^(2n+2)`, with the derived diagonal bound
/// `n ε √ω(0)(X1, X̄1) ≤ √2 n (2n)^(1/(2n)) ε / r^((n+1)/n)`.
pub fn volume_determinant_check(origin_metric: &[f64], margin: f64, n: usize, r: f64, epsilon: f64) -> Result<VolumeReport> {
    if origin_metric.len() != n || n == 0 {
        return Err(LabError::DimensionMismatch {
            expected: n,
            got: origin_metric.len(),
        });
    }
    if !(r > 0.0) || !(epsilon > 0.0) {
        return Err(LabError::InvalidParameter("r and epsilon must be positive".into()));
    }
    let nf = n as f64;
    let applicable = epsilon >= r.powi(n as i32);
    let lhs = 2f64.powi(n as i32) * origin_metric.iter().product::<f64>();
    let rhs = 2f64.powi(2 * n as i32 + 1) * nf / r.powi(2 * n as i32 + 2);
    // first-order propagation of the per-entry margin
    let lhs_margin = 2f64.powi(n as i32)
        * (0..n)
            .map(|j| {
                margin
                    * origin_metric
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, v)| v)
                        .product::<f64>()
            })
            .sum::<f64>();
    let diagonal_lhs = nf * epsilon * origin_metric[0].sqrt();
    let diagonal_rhs = 2f64.sqrt() * nf * (2.0 * nf).powf(1.0 / (2.0 * nf)) * epsilon / r.powf((nf + 1.0) / nf);
    Ok(VolumeReport {
        n,
        applicable,
        lhs,
        rhs,
        margin: lhs_margin,
        passed: applicable && lhs <= rhs + lhs_margin,
        diagonal_lhs,
        diagonal_rhs,
    })
}

/// Origin values `ω(0)(X_j, X̄_j) = 2/R²` of the product metric on `(R𝔻)ⁿ`.
pub fn polydisk_origin_metric(n: usize, big_r: f64) -> Vec<f64> {
    vec![2.0 / (big_r * big_r); n]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionComparison {
    pub direction: Vec<Complex64>,
    /// Poincaré length `|f'(a)X| / (1 - |f(a)|²)` of the pushed-forward vector.
    pub lhs: f64,
    /// `√ω(a)(X, X̄)`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinitesimalReport {
    pub witness: String,
    pub rows: Vec<DirectionComparison>,
    pub min_margin: f64,
    pub all_hold: bool,
}

/// Compares the pushed-forward Poincaré length with the metric along the coordinate
/// directions and `random_directions` seeded unit vectors.
pub fn infinitesimal_comparison(
    grid: &MetricGrid,
    witness: &HolMapToDisk,
    a: &DomainPoint,
    random_directions: usize,
    seed: u64,
) -> Result<InfinitesimalReport> {
    grid.spec.require_interior(a)?;
    let fa = witness.evaluate(a);
    let grad = witness.gradient(a);
    let tol = grid.origin_margin.max(1e-12);
    let mut dirs = vec![
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_directions {
        let v: Vec<Complex64> = (0..2)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        dirs.push(v.into_iter().map(|c| c / norm).collect());
    }
    let mut rows = Vec::with_capacity(dirs.len());
    for x in dirs {
        let push: Complex64 = grad.iter().zip(&x).map(|(g, v)| g * v).sum();
        let lhs = push.norm() / (1.0 - fa.norm_sqr());
        let rhs = metric_value(grid, a, &x)?.max(0.0).sqrt();
        let margin = rhs - lhs;
        rows.push(DirectionComparison {
            direction: x,
            lhs,
            rhs,
            margin,
            holds: margin >= -tol,
            strict: margin > tol,
        });
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(InfinitesimalReport {
        witness: witness.name(),
        all_hold: rows.iter().all(|r| r.holds),
        rows,
        min_margin,
    })
}

/// A source metric `g` and a pulled-back target metric `f*h` at one point, as Hermitian matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub pullback: Vec<Vec<Complex64>>,
    pub source: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchwarzYauReport {
    pub ratio: f64,
    /// `max (f*h)(X, X̄) - (K1/K2) g(X, X̄)` over unit directions.
    pub metric_residual: f64,
    /// `max det(f*h) - (K1/K2)ⁿ det(g)`.
    pub volume_residual: f64,
    pub samples: usize,
}

fn hermitian_form(m: &[Vec<Complex64>], x: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            acc += v * x[i] * x[j].conj();
        }
    }
    acc.re
}

fn hermitian_det(m: &[Vec<Complex64>]) -> f64 {
    // Gaussian elimination without pivoting suffices for positive definite input
    let n = m.len();
    let mut a: Vec<Vec<Complex64>> = m.to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = a[k][k];
        if p.norm() == 0.0 {
            return 0.0;
        }
        det *= p;
        for i in k + 1..n {
            let l = a[i][k] / p;
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= l * v;
            }
        }
    }
    det.re
}

/// Worst violation of the Schwarz-Yau comparisons over the samples, with the coordinate
/// directions and `directions` seeded unit vectors per sample.
pub fn schwarz_yau_residual(pairs: &[MetricPair], bounds: CurvatureBounds, directions: usize, seed: u64) -> Result<SchwarzYauReport> {
    let kappa = bounds.ratio();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut metric_residual = f64::NEG_INFINITY;
    let mut volume_residual = f64::NEG_INFINITY;
    for p in pairs {
        let n = p.source.len();
        if p.pullback.len() != n || p.source.iter().chain(&p.pullback).any(|r| r.len() != n) {
            return Err(LabError::DimensionMismatch {
                expected: n,
                got: p.pullback.len(),
            });
        }
        let mut dirs: Vec<Vec<Complex64>> = (0..n)
            .map(|k| (0..n).map(|j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        for _ in 0..directions {
            let v: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            dirs.push(v.into_iter().map(|c| c / norm).collect());
        }
        for x in &dirs {
            let r = hermitian_form(&p.pullback, x) - kappa * hermitian_form(&p.source, x);
            metric_residual = metric_residual.max(r);
        }
        let v = hermitian_det(&p.pullback) - kappa.powi(n as i32) * hermitian_det(&p.source);
        volume_residual = volume_residual.max(v);
    }
    Ok(SchwarzYauReport {
        ratio: kappa,
        metric_residual,
        volume_residual,
        samples: pairs.len(),
    })
}

/// Metric of the solved grid at `z` as a Hermitian matrix.
pub fn grid_metric_matrix(grid: &MetricGrid, z: &DomainPoint) -> Result<Vec<Vec<Complex64>>> {
    let e1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let e2 = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let g11 = metric_value(grid, z, &e1)?;
    let g22 = metric_value(grid, z, &e2)?;
    // ω(e1 + e2) = g11 + g22 + 2 Re g12, ω(e1 + i e2) = g11 + g22 + 2 Im g12
    let s = metric_value(grid, z, &[e1[0], Complex64::new(1.0, 0.0)])?;
    let t = metric_value(grid, z, &[e1[0], Complex64::new(0.0, 1.0)])?;
    let g12 = Complex64::new((s - g11 - g22) / 2.0, (t - g11 - g22) / 2.0);
    Ok(vec![vec![Complex64::new(g11, 0.0), g12], vec![g12.conj(), Complex64::new(g22, 0.0)]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub c_lb: f64,
    pub ke_estimate: f64,
    pub ke_margin: f64,
    pub k_ub: f64,
    /// `ke_estimate + ke_margin - c_lb`; must be non-negative.
    pub lower_margin: f64,
    /// Informational: both sides are upper bounds, so nothing is certified here.
    pub ke_below_k_ub: bool,
}

/// Checks `c_lb ≤ d^KE estimate` (hard error on violation) and reports the comparison with `k_ub`.
pub fn ke_bracket(
    grid: &MetricGrid,
    x: &DomainPoint,
    y: &DomainPoint,
    c_cert: &BoundCertificate,
    k_cert: &BoundCertificate,
) -> Result<BracketReport> {
    let ke = ke_distance_estimate(grid, x, y)?;
    let lower_margin = ke.value() + ke.margin - c_cert.value();
    if lower_margin < 0.0 {
        return Err(LabError::BracketViolation(format!(
            "Caratheodory lower bound {} exceeds the metric distance estimate {} (+{})",
            c_cert.value(),
            ke.value(),
            ke.margin
        )));
    }
    Ok(BracketReport {
        c_lb: c_cert.value(),
        ke_estimate: ke.value(),
        ke_margin: ke.margin,
        k_ub: k_cert.value(),
        lower_margin,
        ke_below_k_ub: ke.value() <= k_cert.value(),
    })
}
