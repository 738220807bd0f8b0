//! Log-linear disk family `f_k(λ) = B_k(λ) exp(g_k(λ))`.
//!
//! `B_k` carries the forced zeros (`σ - λ` when the target coordinate vanishes, `λ` when
//! the source coordinate does) and `g_k` is a polynomial. On the unit circle the
//! containment constraints are linear in `Re g_k`, so for fixed σ the largest uniform
//! log-slack is a linear program. The smallest feasible σ is found by bisection, and the
//! disk is then expanded into a polynomial and certified like any other.

use std::f64::consts::TAU;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use num_complex::Complex64;

use super::disk::{poly_mul, AnalyticDisk};
use super::lempert::{ChainLeg, OptConfig, Target};
use crate::domain::{DomainPoint, DomainSpec};

/// Required log-slack at the LP angles.
const LP_SLACK: f64 = 2e-3;
const LP_ANGLES: usize = 512;
const COEFF_BOUND: f64 = 50.0;
const MAX_SERIES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Zero {
    /// `x_k ≠ 0 ≠ y_k`.
    None,
    /// `y_k = 0`: factor `σ - λ`.
    AtSigma,
    /// `x_k = 0`: factor `λ`.
    AtOrigin,
    /// Coordinate identically zero.
    Both,
}

struct Layout {
    zeros: Vec<Zero>,
    degree: usize,
}

impl Layout {
    fn new(x: &DomainPoint, y: &DomainPoint, degree: usize) -> Self {
        let zeros = x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(a, b)| match (a.norm() == 0.0, b.norm() == 0.0) {
                (false, false) => Zero::None,
                (false, true) => Zero::AtSigma,
                (true, false) => Zero::AtOrigin,
                (true, true) => Zero::Both,
            })
            .collect();
        Self { zeros, degree }
    }

    fn log_b(&self, k: usize, sigma: f64, lam: Complex64) -> f64 {
        match self.zeros[k] {
            Zero::AtSigma => (Complex64::new(sigma, 0.0) - lam).norm().ln(),
            _ => 0.0,
        }
    }

    /// Interpolation values of `g_k` as `(node, value)` pairs.
    fn conditions(&self, k: usize, x: Complex64, y: Complex64, sigma: f64) -> Vec<(f64, Complex64)> {
        match self.zeros[k] {
            Zero::None => vec![(0.0, x.ln()), (sigma, y.ln())],
            Zero::AtSigma => vec![(0.0, (x / sigma).ln())],
            Zero::AtOrigin => vec![(sigma, (y / sigma).ln())],
            Zero::Both => Vec::new(),
        }
    }
}

/// Maximizes the uniform log-slack `t` for fixed σ; returns `(t, g)`.
fn solve_lp(
    spec: &DomainSpec,
    layout: &Layout,
    x: &DomainPoint,
    y: &DomainPoint,
    sigma: f64,
) -> Option<(f64, Vec<Vec<Complex64>>)> {
    let n = spec.n;
    let d = layout.degree;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Vec<(Variable, Variable)>> = (0..n)
        .map(|k| {
            if layout.zeros[k] == Zero::Both {
                return Vec::new();
            }
            (0..=d)
                .map(|_| {
                    (
                        lp.add_var(0.0, (-COEFF_BOUND, COEFF_BOUND)),
                        lp.add_var(0.0, (-COEFF_BOUND, COEFF_BOUND)),
                    )
                })
                .collect()
        })
        .collect();
    let t = lp.add_var(1.0, (-COEFF_BOUND, 1.0));
    for k in 0..n {
        for (node, value) in layout.conditions(k, x.coords[k], y.coords[k], sigma) {
            let mut re = LinearExpr::empty();
            let mut im = LinearExpr::empty();
            let mut pow = 1.0;
            for &(a, b) in &vars[k] {
                re.add(a, pow);
                im.add(b, pow);
                pow *= node;
            }
            lp.add_constraint(re, ComparisonOp::Eq, value.re);
            lp.add_constraint(im, ComparisonOp::Eq, value.im);
        }
    }
    let log_r = spec.big_r.ln();
    for a in 0..LP_ANGLES {
        let theta = TAU * a as f64 / LP_ANGLES as f64;
        let lam = Complex64::from_polar(1.0, theta);
        let re_g = |k: usize, expr: &mut LinearExpr| {
            for (j, &(a, b)) in vars[k].iter().enumerate() {
                let (s, c) = (j as f64 * theta).sin_cos();
                expr.add(a, c);
                expr.add(b, -s);
            }
        };
        let mut log_b_total = 0.0;
        let mut product = LinearExpr::empty();
        for k in 0..n {
            if layout.zeros[k] == Zero::Both {
                continue;
            }
            let lb = layout.log_b(k, sigma, lam);
            log_b_total += lb;
            let mut expr = LinearExpr::empty();
            re_g(k, &mut expr);
            expr.add(t, 1.0);
            lp.add_constraint(expr, ComparisonOp::Le, log_r - lb);
            re_g(k, &mut product);
        }
        if !spec.is_polydisk() && layout.zeros.iter().all(|z| *z != Zero::Both) {
            product.add(t, 1.0);
            lp.add_constraint(product, ComparisonOp::Le, spec.epsilon.ln() - log_b_total);
        }
    }
    let sol = lp.solve().ok()?;
    let g = vars
        .iter()
        .map(|vk| {
            vk.iter()
                .map(|&(a, b)| Complex64::new(*sol.var_value(a), *sol.var_value(b)))
                .collect()
        })
        .collect();
    Some((*sol.var_value(t), g))
}

/// Taylor coefficients of `exp(g)`, truncated once the terms are negligible.
fn exp_series(g: &[Complex64]) -> Vec<Complex64> {
    let Some(&g0) = g.first() else {
        return vec![Complex64::new(0.0, 0.0)];
    };
    let mut e = vec![g0.exp()];
    let scale = e[0].norm();
    let k = g.len() - 1;
    let mut quiet = 0;
    for m in 1..MAX_SERIES {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=m.min(k) {
            acc += j as f64 * g[j] * e[m - j];
        }
        let em = acc / m as f64;
        e.push(em);
        quiet = if em.norm() < 1e-17 * scale { quiet + 1 } else { 0 };
        if quiet > k.max(1) {
            break;
        }
    }
    e
}

fn to_polynomial(
    layout: &Layout,
    g: &[Vec<Complex64>],
    x: &DomainPoint,
    y: &DomainPoint,
    sigma: f64,
) -> AnalyticDisk {
    let coefficients = (0..x.dim())
        .map(|k| {
            if layout.zeros[k] == Zero::Both {
                return vec![Complex64::new(0.0, 0.0)];
            }
            let e = exp_series(&g[k]);
            let mut c = match layout.zeros[k] {
                Zero::AtSigma => poly_mul(&[Complex64::new(sigma, 0.0), Complex64::new(-1.0, 0.0)], &e),
                Zero::AtOrigin => poly_mul(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], &e),
                _ => e,
            };
            // exact interpolation after truncation
            c[0] = x.coords[k];
            let at_sigma = super::disk::horner(&c, Complex64::new(sigma, 0.0));
            if c.len() < 2 {
                c.push(Complex64::new(0.0, 0.0));
            }
            c[1] += (y.coords[k] - at_sigma) / sigma;
            c
        })
        .collect();
    AnalyticDisk {
        coefficients,
        validity_margin: 0.0,
    }
}

/// Smallest-σ certified disk from the structured family, if any.
pub(crate) fn structured_leg(spec: &DomainSpec, x: &DomainPoint, y: &DomainPoint, cfg: &OptConfig) -> Option<ChainLeg> {
    let layout = Layout::new(x, y, cfg.structured_degree);
    let feasible = |s: f64| solve_lp(spec, &layout, x, y, s).filter(|(t, _)| *t >= LP_SLACK);
    // Schwarz-Pick on each coordinate bounds σ from below
    let mut lo = x
        .coords
        .iter()
        .zip(&y.coords)
        .map(|(a, b)| crate::hyperbolic::pseudo_hyperbolic(a / spec.big_r, b / spec.big_r))
        .fold(0.0, f64::max);
    let mut hi = 1.0 - 1e-9;
    let mut best = feasible(hi)?;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        match feasible(mid) {
            Some(sol) => {
                hi = mid;
                best = sol;
            }
            None => lo = mid,
        }
    }
    let disk = to_polynomial(&layout, &best.1, x, y, hi);
    super::lempert::restore(Target::Domain(spec), &disk, hi, cfg)
}
