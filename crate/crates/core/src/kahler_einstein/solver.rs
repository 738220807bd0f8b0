//! Newton solver for `det(u_{i j̄}) = e^u` on two-dimensional Reinhardt domains.
//!
//! The potential depends on `(t1, t2) = (|z1|, |z2|)` only. On the real slice its complex
//! Hessian is `¼ [[u11 + u1/t1, u12], [u12, u22 + u2/t2]]`, with `u_i/t_i → u_ii` on the
//! axes by evenness. The unknown is `w = u - u0` for an analytic background `u0` that carries
//! the boundary blow-up, so finite differences only ever touch the smooth part.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::banded::BandMatrix;
use crate::domain::DomainSpec;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Number of grid intervals on `[0, R]` per axis.
    pub resolution: usize,
    /// Width of the boundary collar excluded from assertions, in grid steps.
    pub collar: f64,
    /// Tolerance on the max-norm of `log det g - u`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 128,
            collar: 2.0,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// `u0 = 2 log(2/R²) - 2 Σ log(1 - t_i²/R²) - 2 log(1 - t1² t2²/ε²)`; the last term only
/// when the product constraint is not redundant. Exact for the polydisk.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Background {
    big_r: f64,
    eps: f64,
    product: bool,
}

impl Background {
    pub fn new(spec: &DomainSpec) -> Self {
        Self {
            big_r: spec.big_r,
            eps: spec.epsilon,
            product: !spec.is_polydisk(),
        }
    }

    /// Distance-like boundary slack; non-positive outside.
    pub fn slack(&self, t1: f64, t2: f64) -> f64 {
        let mut s = (self.big_r - t1).min(self.big_r - t2);
        if self.product {
            let norm = t1.hypot(t2);
            if norm > 0.0 {
                s = s.min((self.eps - t1 * t2) / norm);
            }
        }
        s
    }

    /// `[u0, u0_11 + u0_1/t1, u0_12, u0_22 + u0_2/t2]`.
    pub fn eval(&self, t1: f64, t2: f64) -> [f64; 4] {
        let r2 = self.big_r * self.big_r;
        let radial = |t: f64| -> (f64, f64) {
            let d = r2 - t * t;
            (-2.0 * (d / r2).ln(), 8.0 * r2 / (d * d))
        };
        let (a1, h1) = radial(t1);
        let (a2, h2) = radial(t2);
        let mut out = [2.0 * (2.0 / r2).ln() + a1 + a2, h1, 0.0, h2];
        if self.product {
            let e2 = self.eps * self.eps;
            let p = t1 * t1 * t2 * t2 / e2;
            let q = 1.0 - p;
            let (p1, p2) = (2.0 * t1 * t2 * t2 / e2, 2.0 * t1 * t1 * t2 / e2);
            let (p11, p22) = (2.0 * t2 * t2 / e2, 2.0 * t1 * t1 / e2);
            let p12 = 4.0 * t1 * t2 / e2;
            out[0] += -2.0 * q.ln();
            // p_i / t_i equals p_ii for this monomial
            out[1] += 2.0 * (2.0 * p11) / q + 2.0 * p1 * p1 / (q * q);
            out[2] += 2.0 * p12 / q + 2.0 * p1 * p2 / (q * q);
            out[3] += 2.0 * (2.0 * p22) / q + 2.0 * p2 * p2 / (q * q);
        }
        out
    }
}

/// Linear stencil for `(w11 + w1/t1, w12, w22 + w2/t2)` at a node, as
/// `(di, dj, [c11, c12, c22])` over the 3×3 neighbourhood.
pub(crate) fn stencil_coeffs(t1: f64, t2: f64, h: f64) -> Vec<(i32, i32, [f64; 3])> {
    let h2 = h * h;
    let mut out = Vec::with_capacity(9);
    let mut push = |di: i32, dj: i32, k: usize, v: f64| {
        if let Some(e) = out.iter_mut().find(|(a, b, _)| *a == di && *b == dj) {
            let e: &mut (i32, i32, [f64; 3]) = e;
            e.2[k] += v;
        } else {
            let mut c = [0.0; 3];
            c[k] = v;
            out.push((di, dj, c));
        }
    };
    for (k, t, axis) in [(0usize, t1, 0usize), (2, t2, 1)] {
        let at = |d: i32| if axis == 0 { (d, 0) } else { (0, d) };
        if t > 0.0 {
            let (m, z, p) = (at(-1), at(0), at(1));
            push(m.0, m.1, k, 1.0 / h2 - 1.0 / (2.0 * h * t));
            push(z.0, z.1, k, -2.0 / h2);
            push(p.0, p.1, k, 1.0 / h2 + 1.0 / (2.0 * h * t));
        } else {
            let (m, z, p) = (at(-1), at(0), at(1));
            push(m.0, m.1, k, 2.0 / h2);
            push(z.0, z.1, k, -4.0 / h2);
            push(p.0, p.1, k, 2.0 / h2);
        }
    }
    let q = 1.0 / (4.0 * h2);
    for (di, dj, s) in [(1, 1, q), (1, -1, -q), (-1, 1, -q), (-1, -1, q)] {
        push(di, dj, 1, s);
    }
    out
}

/// Reduced complex Hessian `¼(…)` of a radial function by the solver's stencil.
/// Negative arguments are reflected, matching the evenness ghosts.
pub fn fd_reduced_hessian(f: &dyn Fn(f64, f64) -> f64, t1: f64, t2: f64, h: f64) -> [f64; 3] {
    let mut m = [0.0; 3];
    for (di, dj, c) in stencil_coeffs(t1, t2, h) {
        let v = f((t1 + di as f64 * h).abs(), (t2 + dj as f64 * h).abs());
        for k in 0..3 {
            m[k] += 0.25 * c[k] * v;
        }
    }
    m
}

/// `det(u_{i j̄})` from the Hessian of `v(s) = u(e^{s1}, e^{s2})`:
/// `e^{-2(s1+s2)} det(D²v) / 16`.
pub fn log_coordinate_determinant(d2v: [[f64; 2]; 2], s1: f64, s2: f64) -> f64 {
    let det = d2v[0][0] * d2v[1][1] - d2v[0][1] * d2v[1][0];
    (-2.0 * (s1 + s2)).exp() * det / 16.0
}

/// Solved metric on the grid `t_i = k h`, `k = 0..=resolution`. Arrays are indexed by
/// `i * size + j`; inactive (exterior or boundary) nodes hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGrid {
    pub spec: DomainSpec,
    pub h: f64,
    pub size: usize,
    pub collar: f64,
    pub active: Vec<bool>,
    pub slack: Vec<f64>,
    pub u: Vec<f64>,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
    /// `|det g - e^u| / e^u`.
    pub residual: Vec<f64>,
    /// `ω(0)(X_i, X̄_i)` for the coordinate vectors.
    pub origin_metric: [f64; 2],
    /// Error estimate for `origin_metric` (Richardson plus solver tolerance).
    pub origin_margin: f64,
    pub iterations: usize,
    /// Max-norm of `log det g - u` over active nodes.
    pub max_log_residual: f64,
}

impl MetricGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.size + j
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// `[g11, g12, g22]` at an active node.
    pub fn node_metric(&self, i: usize, j: usize) -> Option<[f64; 3]> {
        if i >= self.size || j >= self.size {
            return None;
        }
        let k = self.index(i, j);
        self.active[k].then(|| [self.g11[k], self.g12[k], self.g22[k]])
    }

    /// Whether the node lies outside the boundary collar.
    pub fn in_core(&self, i: usize, j: usize) -> bool {
        let k = self.index(i, j);
        self.active[k] && self.slack[k] > self.collar * self.h
    }

    /// Bilinear interpolation of the metric; `None` unless all cell corners are active.
    pub fn metric_at(&self, t1: f64, t2: f64) -> Option<[f64; 3]> {
        if t1 < 0.0 || t2 < 0.0 {
            return None;
        }
        let (x, y) = (t1 / self.h, t2 / self.h);
        let (i0, j0) = (x.floor() as usize, y.floor() as usize);
        let (i0, j0) = (i0.min(self.size - 2), j0.min(self.size - 2));
        let (fx, fy) = (x - i0 as f64, y - j0 as f64);
        if fx > 1.0 + 1e-12 || fy > 1.0 + 1e-12 {
            return None;
        }
        let mut out = [0.0; 3];
        for (di, dj, wgt) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            let m = self.node_metric(i0 + di, j0 + dj)?;
            for k in 0..3 {
                out[k] += wgt * m[k];
            }
        }
        Some(out)
    }

    /// Flat CSV of active nodes: `t1, t2, u, g11, g12, g22, residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| LabError::InvalidParameter(format!("csv output: {e}"));
        w.write_record(["t1", "t2", "u", "g11", "g12", "g22", "residual"]).map_err(io)?;
        for i in 0..self.size {
            for j in 0..self.size {
                let k = self.index(i, j);
                if !self.active[k] {
                    continue;
                }
                let vals = [self.t(i), self.t(j), self.u[k], self.g11[k], self.g12[k], self.g22[k], self.residual[k]];
                w.write_record(vals.iter().map(|v| format!("{v:.12e}"))).map_err(io)?;
            }
        }
        w.flush().map_err(|e| LabError::InvalidParameter(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// Result of a solve that may not have converged; the grid then holds the last iterate.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub grid: MetricGrid,
    pub failure: Option<LabError>,
}

struct Node {
    i: usize,
    j: usize,
    background: [f64; 4],
    /// `(unknown index, [c11, c12, c22])`.
    taps: Vec<(usize, [f64; 3])>,
}

struct System {
    nodes: Vec<Node>,
    /// Unknown index of the mirrored node `(j, i)`.
    mirror: Vec<usize>,
    band: usize,
}

impl System {
    fn build(spec: &DomainSpec, bg: &Background, size: usize, h: f64) -> (Self, Vec<Option<usize>>, Vec<f64>) {
        let mut slack = vec![f64::NAN; size * size];
        let mut unknown = vec![None; size * size];
        let mut count = 0;
        for i in 0..size {
            for j in 0..size {
                let s = bg.slack(i as f64 * h, j as f64 * h);
                slack[i * size + j] = s;
                if s > 0.25 * h {
                    unknown[i * size + j] = Some(count);
                    count += 1;
                }
            }
        }
        let _ = spec;
        let mut nodes = Vec::with_capacity(count);
        let mut band = 0usize;
        for i in 0..size {
            for j in 0..size {
                let Some(row) = unknown[i * size + j] else { continue };
                let (t1, t2) = (i as f64 * h, j as f64 * h);
                let mut taps: Vec<(usize, [f64; 3])> = Vec::new();
                for (di, dj, c) in stencil_coeffs(t1, t2, h) {
                    // evenness ghosts across the axes
                    let ni = (i as i64 + di as i64).unsigned_abs() as usize;
                    let nj = (j as i64 + dj as i64).unsigned_abs() as usize;
                    if ni >= size || nj >= size {
                        continue;
                    }
                    let Some(col) = unknown[ni * size + nj] else { continue };
                    band = band.max(col.abs_diff(row));
                    if let Some(e) = taps.iter_mut().find(|(k, _)| *k == col) {
                        for q in 0..3 {
                            e.1[q] += c[q];
                        }
                    } else {
                        taps.push((col, c));
                    }
                }
                nodes.push(Node {
                    i,
                    j,
                    background: bg.eval(t1, t2),
                    taps,
                });
            }
        }
        let mirror = nodes
            .iter()
            .map(|n| unknown[n.j * size + n.i].expect("domain is symmetric"))
            .collect();
        (Self { nodes, mirror, band }, unknown, slack)
    }

    /// Metric `¼(A + stencil·w)` per node, or the first node where it is not positive definite.
    fn metrics(&self, w: &[f64]) -> std::result::Result<Vec<[f64; 3]>, (usize, usize)> {
        self.nodes
            .iter()
            .map(|n| {
                let mut m = [n.background[1], n.background[2], n.background[3]];
                for (col, c) in &n.taps {
                    for q in 0..3 {
                        m[q] += c[q] * w[*col];
                    }
                }
                let m = [0.25 * m[0], 0.25 * m[1], 0.25 * m[2]];
                let det = m[0] * m[2] - m[1] * m[1];
                if m[0] > 0.0 && det > 0.0 && det.is_finite() {
                    Ok(m)
                } else {
                    Err((n.i, n.j))
                }
            })
            .collect()
    }

    fn residual(&self, w: &[f64], m: &[[f64; 3]]) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(m)
            .enumerate()
            .map(|(k, (n, m))| (m[0] * m[2] - m[1] * m[1]).ln() - n.background[0] - w[k])
            .collect()
    }

    fn jacobian(&self, m: &[[f64; 3]]) -> BandMatrix {
        let mut jac = BandMatrix::new(self.nodes.len(), self.band, self.band);
        for (row, (n, m)) in self.nodes.iter().zip(m).enumerate() {
            let det = m[0] * m[2] - m[1] * m[1];
            for (col, c) in &n.taps {
                let d = (m[2] * c[0] + m[0] * c[2] - 2.0 * m[1] * c[1]) / (4.0 * det);
                jac.add(row, *col, d);
            }
            jac.add(row, row, -1.0);
        }
        jac
    }

    fn symmetrize(&self, w: &mut [f64]) {
        for k in 0..w.len() {
            let m = self.mirror[k];
            if m > k {
                let avg = 0.5 * (w[k] + w[m]);
                w[k] = avg;
                w[m] = avg;
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Solves on `{t_i < R, t1 t2 < ε}` and fails with the last iterate on non-convergence.
pub fn solve_ke(spec: &DomainSpec, cfg: &GridConfig) -> Result<MetricGrid> {
    let out = solve_ke_outcome(spec, cfg, None)?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.grid),
    }
}

/// Full solve with an optional initial guess for `w = u - u0` as a function of `(t1, t2)`.
pub fn solve_ke_outcome(
    spec: &DomainSpec,
    cfg: &GridConfig,
    initial: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<SolveOutcome> {
    spec.validate()?;
    if spec.n != 2 {
        return Err(LabError::InvalidParameter(format!(
            "the metric solver supports n = 2 only, got n = {}",
            spec.n
        )));
    }
    if cfg.resolution < 8 || !(cfg.tol > 0.0) {
        return Err(LabError::InvalidParameter(
            "grid resolution must be >= 8 and tolerance positive".into(),
        ));
    }
    let size = cfg.resolution + 1;
    let h = spec.big_r / cfg.resolution as f64;
    let bg = Background::new(spec);
    let (sys, unknown, slack) = System::build(spec, &bg, size, h);
    let mut w: Vec<f64> = sys
        .nodes
        .iter()
        .map(|n| initial.map_or(0.0, |f| f(n.i as f64 * h, n.j as f64 * h)))
        .collect();
    sys.symmetrize(&mut w);

    let mut failure = None;
    let mut iterations = 0;
    let mut metrics = match sys.metrics(&w) {
        Ok(m) => m,
        Err((i, j)) => return Err(LabError::HessianLoss { i, j }),
    };
    let mut f = sys.residual(&w, &metrics);
    loop {
        let norm = max_abs(&f);
        if norm <= cfg.tol {
            break;
        }
        if iterations >= cfg.max_iter {
            failure = Some(LabError::NonConvergence {
                iterations,
                residual: norm,
            });
            break;
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let Some(step) = sys.jacobian(&metrics).solve(&rhs) else {
            failure = Some(LabError::NonConvergence {
                iterations,
                residual: norm,
            });
            break;
        };
        let base = sum_sq(&f);
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut loss = None;
        for _ in 0..30 {
            let mut trial: Vec<f64> = w.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
            sys.symmetrize(&mut trial);
            match sys.metrics(&trial) {
                Ok(m) => {
                    let ft = sys.residual(&trial, &m);
                    if sum_sq(&ft) <= (1.0 - 1e-4 * alpha) * base {
                        accepted = Some((trial, m, ft));
                        break;
                    }
                }
                Err(node) => loss = Some(node),
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((wn, m, fnew)) => {
                w = wn;
                metrics = m;
                f = fnew;
            }
            None => {
                failure = Some(match loss {
                    Some((i, j)) if alpha < 1e-8 => LabError::HessianLoss { i, j },
                    _ => LabError::NonConvergence {
                        iterations,
                        residual: norm,
                    },
                });
                break;
            }
        }
    }

    let nan = vec![f64::NAN; size * size];
    let (mut u, mut g11, mut g12, mut g22, mut residual) = (nan.clone(), nan.clone(), nan.clone(), nan.clone(), nan);
    let mut active = vec![false; size * size];
    for (k, n) in sys.nodes.iter().enumerate() {
        let idx = n.i * size + n.j;
        active[idx] = true;
        u[idx] = n.background[0] + w[k];
        g11[idx] = metrics[k][0];
        g12[idx] = metrics[k][1];
        g22[idx] = metrics[k][2];
        residual[idx] = f[k].exp_m1().abs();
    }
    let wat = |i: usize, j: usize| unknown[i * size + j].map_or(0.0, |k| w[k]);
    let w11_h = 2.0 * (wat(1, 0) - wat(0, 0)) / (h * h);
    let w11_2h = 2.0 * (wat(2, 0) - wat(0, 0)) / (4.0 * h * h);
    let origin = unknown[0].expect("origin is interior");
    let origin_metric = [metrics[origin][0], metrics[origin][2]];
    let origin_margin = 0.5 * (w11_h - w11_2h).abs() / 3.0 + origin_metric[0] * cfg.tol;
    Ok(SolveOutcome {
        grid: MetricGrid {
            spec: spec.clone(),
            h,
            size,
            collar: cfg.collar,
            active,
            slack,
            u,
            g11,
            g12,
            g22,
            residual,
            origin_metric,
            origin_margin,
            iterations,
            max_log_residual: max_abs(&f),
        },
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_is_exact_on_the_polydisk() {
        let spec = DomainSpec::new(2, 0.5, 0.9, 1.0).unwrap();
        let bg = Background::new(&spec);
        let [u, a11, a12, a22] = bg.eval(0.3, 0.6);
        let det = (a11 / 4.0) * (a22 / 4.0) - a12 * a12 / 16.0;
        assert!((det.ln() - u).abs() < 1e-12);
    }

    #[test]
    fn background_hessian_matches_stencil() {
        let spec = DomainSpec::new(2, 0.8, 1.0, 0.05).unwrap();
        let bg = Background::new(&spec);
        let f = |a: f64, b: f64| bg.eval(a, b)[0];
        for (t1, t2) in [(0.1, 0.2), (0.0, 0.15), (0.2, 0.0)] {
            let [_, a11, a12, a22] = bg.eval(t1, t2);
            let m = fd_reduced_hessian(&f, t1, t2, 1e-4);
            assert!((m[0] - a11 / 4.0).abs() < 1e-5 * a11, "{m:?} vs {a11}");
            assert!((m[1] - a12 / 4.0).abs() < 1e-4 * (1.0 + a12.abs()));
            assert!((m[2] - a22 / 4.0).abs() < 1e-5 * a22);
        }
    }

    #[test]
    fn band_matrix_solves_a_small_system() {
        let spec = DomainSpec::new(2, 0.5, 1.0, 0.3).unwrap();
        let grid = solve_ke(
            &spec,
            &GridConfig {
                resolution: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(grid.max_log_residual <= 1e-8);
    }
}
