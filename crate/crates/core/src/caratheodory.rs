//! Lower bounds on the Carathéodory distance from explicit maps into the unit disk.
//!
//! Every certificate is `ρ(f(x), f(y))` for a map `f` whose sup norm over the domain
//! is at most one: exactly for projections and monomials, and through a rigorous
//! sampling bound (plus the margin `η`) for optimized polynomials.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{BoundCertificate, Witness};
use crate::domain::{DomainPoint, DomainSpec, ExhaustionLevel};
use crate::error::{LabError, Result};
use crate::hyperbolic::rho;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub coefficient: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapKind {
    CoordinateProjection { index: usize },
    Chi,
    Monomial { alpha: Vec<u32> },
    Polynomial { terms: Vec<PolyTerm> },
}

/// A holomorphic map `z ↦ raw(z) / scale` into the unit disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolMapToDisk {
    pub kind: MapKind,
    /// Upper bound for `sup |raw|` over the domain.
    pub raw_sup: f64,
    pub scale: f64,
    /// Whether `raw_sup` is the exact supremum.
    pub exact: bool,
}

pub(crate) fn monomial(alpha: &[u32], z: &[Complex64]) -> Complex64 {
    alpha
        .iter()
        .zip(z)
        .fold(Complex64::new(1.0, 0.0), |acc, (&a, &c)| acc * c.powu(a))
}

fn monomial_partial(alpha: &[u32], z: &[Complex64], i: usize) -> Complex64 {
    if alpha[i] == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut out = Complex64::new(alpha[i] as f64, 0.0);
    for (j, (&a, &c)) in alpha.iter().zip(z).enumerate() {
        let e = if j == i { a - 1 } else { a };
        out *= c.powu(e);
    }
    out
}

impl HolMapToDisk {
    pub fn sup_norm_certificate(&self) -> f64 {
        self.raw_sup / self.scale
    }

    pub fn raw(&self, z: &[Complex64]) -> Complex64 {
        match &self.kind {
            MapKind::CoordinateProjection { index } => z[*index],
            MapKind::Chi => z.iter().fold(Complex64::new(1.0, 0.0), |a, c| a * c),
            MapKind::Monomial { alpha } => monomial(alpha, z),
            MapKind::Polynomial { terms } => terms
                .iter()
                .map(|t| t.coefficient * monomial(&t.exponents, z))
                .sum(),
        }
    }

    pub fn evaluate(&self, z: &DomainPoint) -> Complex64 {
        self.raw(&z.coords) / self.scale
    }

    /// Holomorphic gradient `(∂f/∂z_1, …, ∂f/∂z_n)` at `z`.
    pub fn gradient(&self, z: &DomainPoint) -> Vec<Complex64> {
        let n = z.dim();
        let zc = &z.coords;
        (0..n)
            .map(|i| {
                let g = match &self.kind {
                    MapKind::CoordinateProjection { index } => {
                        Complex64::new(if *index == i { 1.0 } else { 0.0 }, 0.0)
                    }
                    MapKind::Chi => monomial_partial(&vec![1; n], zc, i),
                    MapKind::Monomial { alpha } => monomial_partial(alpha, zc, i),
                    MapKind::Polynomial { terms } => terms
                        .iter()
                        .map(|t| t.coefficient * monomial_partial(&t.exponents, zc, i))
                        .sum(),
                };
                g / self.scale
            })
            .collect()
    }

    /// Common coefficient `a` of the linear part `a (z_1 + … + z_n)`, when the linear part has that form.
    pub fn linear_coefficient_a(&self, n: usize) -> Option<Complex64> {
        let grad = self.gradient(&DomainPoint::origin(n));
        let first = grad[0];
        grad.iter()
            .all(|g| (g - first).norm() <= 1e-14 * (1.0 + first.norm()))
            .then_some(first)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::CoordinateProjection { index } => format!("projection({})", index + 1),
            MapKind::Chi => "chi".into(),
            MapKind::Monomial { alpha } => {
                let parts: Vec<String> = alpha.iter().map(|a| a.to_string()).collect();
                format!("monomial({})", parts.join(","))
            }
            MapKind::Polynomial { terms } => {
                let deg = terms
                    .iter()
                    .map(|t| t.exponents.iter().sum::<u32>())
                    .max()
                    .unwrap_or(0);
                format!("polynomial(deg {deg})")
            }
        }
    }

    /// Lower certificate `ρ(f(x), f(y))`.
    pub fn certificate(&self, x: &DomainPoint, y: &DomainPoint, margin: f64) -> BoundCertificate {
        let value = rho(self.evaluate(x), self.evaluate(y));
        BoundCertificate::lower(value, Witness::Map(self.clone()), margin)
    }
}

/// Settings for the map families searched by [`best_lower_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Largest total degree of monomials and polynomial witnesses.
    pub degree_cap: u32,
    /// Relative margin deducted from polynomial sup norms.
    pub eta: f64,
    pub seed: u64,
    /// Ascent iterations per start.
    pub iterations: usize,
    /// Optimize polynomial witnesses (two-dimensional domains only).
    pub optimize_polynomials: bool,
    pub starts: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            degree_cap: 4,
            eta: 1e-3,
            seed: 0,
            iterations: 500,
            optimize_polynomials: true,
            starts: 4,
        }
    }
}

/// All exponent vectors of length `n` with total degree in `[lo, hi]`, in a fixed order.
pub fn multi_indices(n: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in (0..=left).rev() {
            cur.push(a);
            rec(n, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in lo..=hi {
        rec(n, d, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// Exact `sup_G |z^α| = R^{|α|} · min(1, ε/Rⁿ)^{min α}`.
pub fn monomial_sup(spec: &DomainSpec, alpha: &[u32]) -> f64 {
    let total: u32 = alpha.iter().sum();
    let amin = alpha.iter().copied().min().unwrap_or(0);
    let cap_ratio = (spec.epsilon / spec.big_r.powi(spec.n as i32)).min(1.0);
    spec.big_r.powi(total as i32) * cap_ratio.powi(amin as i32)
}

pub fn normalize_monomial(spec: &DomainSpec, alpha: &[u32]) -> Result<HolMapToDisk> {
    if alpha.len() != spec.n {
        return Err(LabError::DimensionMismatch {
            expected: spec.n,
            got: alpha.len(),
        });
    }
    if alpha.iter().all(|&a| a == 0) {
        return Err(LabError::InvalidParameter("exponent vector must be nonzero".into()));
    }
    let sup = monomial_sup(spec, alpha);
    Ok(HolMapToDisk {
        kind: MapKind::Monomial {
            alpha: alpha.to_vec(),
        },
        raw_sup: sup,
        scale: sup,
        exact: true,
    })
}

fn check_pair(spec: &DomainSpec, x: &DomainPoint, y: &DomainPoint) -> Result<()> {
    spec.require_interior(x)?;
    spec.require_interior(y)
}

pub fn chi_lower_bound(
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
) -> Result<BoundCertificate> {
    check_pair(spec, x, y)?;
    let map = HolMapToDisk {
        kind: MapKind::Chi,
        raw_sup: spec.epsilon.min(spec.big_r.powi(spec.n as i32)),
        scale: spec.epsilon,
        exact: true,
    };
    Ok(map.certificate(x, y, 0.0))
}

pub fn projection_lower_bound(
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    index: usize,
) -> Result<BoundCertificate> {
    if index >= spec.n {
        return Err(LabError::InvalidParameter(format!(
            "coordinate index {index} out of range for n = {}",
            spec.n
        )));
    }
    check_pair(spec, x, y)?;
    let map = HolMapToDisk {
        kind: MapKind::CoordinateProjection { index },
        raw_sup: spec.big_r,
        scale: spec.big_r,
        exact: true,
    };
    Ok(map.certificate(x, y, 0.0))
}

fn better(a: BoundCertificate, b: BoundCertificate) -> BoundCertificate {
    if b.value() > a.value() {
        b
    } else {
        a
    }
}

/// Largest certificate over projections, χ, normalized monomials and (optionally)
/// optimized polynomial witnesses.
pub fn best_lower_bound(
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &FamilyConfig,
) -> Result<BoundCertificate> {
    check_pair(spec, x, y)?;
    if x == y {
        return Ok(BoundCertificate::lower(0.0, Witness::Trivial, 0.0));
    }
    // canonical order makes the result exactly symmetric in (x, y)
    let (x, y) = canonical_pair(x, y);
    let mut best = chi_lower_bound(spec, x, y)?;
    for i in 0..spec.n {
        best = better(best, projection_lower_bound(spec, x, y, i)?);
    }
    for alpha in multi_indices(spec.n, 1, cfg.degree_cap) {
        best = better(best, normalize_monomial(spec, &alpha)?.certificate(x, y, 0.0));
    }
    if cfg.optimize_polynomials && spec.n == 2 && cfg.degree_cap >= 1 {
        if let Some(cert) = optimize_polynomial(spec, x, y, cfg, &best) {
            best = better(best, cert);
        }
    }
    Ok(best)
}

fn canonical_pair<'a>(x: &'a DomainPoint, y: &'a DomainPoint) -> (&'a DomainPoint, &'a DomainPoint) {
    let key = |p: &DomainPoint| -> Vec<(f64, f64)> { p.coords.iter().map(|c| (c.re, c.im)).collect() };
    match key(x).partial_cmp(&key(y)) {
        Some(std::cmp::Ordering::Greater) => (y, x),
        _ => (x, y),
    }
}

/// Distinguished-boundary samples of a two-dimensional domain: moduli on the
/// binding curve `t1 t2 = min(ε, R²)` times a torus grid of angles.
struct TorusGrid {
    /// Moduli pairs, ordered by `log t1`.
    moduli: Vec<[f64; 2]>,
    /// Spacing in `log t1` between consecutive moduli (0 for a single point).
    log_step: f64,
    angles: usize,
}

impl TorusGrid {
    fn new(spec: &DomainSpec, radii: usize, angles: usize) -> Self {
        let r = spec.big_r;
        if spec.is_polydisk() {
            return Self {
                moduli: vec![[r, r]],
                log_step: 0.0,
                angles,
            };
        }
        let lo = (spec.epsilon / r).ln();
        let hi = r.ln();
        let k = radii.max(2);
        let step = (hi - lo) / (k - 1) as f64;
        let moduli = (0..k)
            .map(|i| {
                let t1 = (lo + step * i as f64).exp().min(r);
                [t1, (spec.epsilon / t1).min(r)]
            })
            .collect();
        Self {
            moduli,
            log_step: step,
            angles,
        }
    }

    fn for_each_point(&self, mut f: impl FnMut([Complex64; 2])) {
        let units: Vec<Complex64> = (0..self.angles)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / self.angles as f64))
            .collect();
        for m in &self.moduli {
            for u1 in &units {
                for u2 in &units {
                    f([u1 * m[0], u2 * m[1]]);
                }
            }
        }
    }
}

/// Rigorous upper bound for `sup_G |p|` of a two-variable polynomial.
///
/// On each torus the maximum of `|p|²` (a trigonometric polynomial) is controlled by
/// Bernstein's inequality; between tori the modulus varies at most by the Lipschitz
/// bound `Σ |c_α| |α_1 - α_2| sup|z^α|` per unit of `log t1`.
fn certified_poly_sup(spec: &DomainSpec, basis: &[Vec<u32>], coeffs: &[Complex64], grid: &TorusGrid) -> f64 {
    let mut sampled = 0.0f64;
    grid.for_each_point(|z| {
        let v: Complex64 = basis
            .iter()
            .zip(coeffs)
            .map(|(a, c)| c * z[0].powu(a[0]) * z[1].powu(a[1]))
            .sum();
        sampled = sampled.max(v.norm());
    });
    let max_deg: [u32; 2] = [
        basis.iter().map(|a| a[0]).max().unwrap_or(0),
        basis.iter().map(|a| a[1]).max().unwrap_or(0),
    ];
    let dtheta = TAU / grid.angles as f64;
    let spread = (max_deg[0] + max_deg[1]) as f64 * dtheta;
    let shrink = 1.0 - spread * spread / 8.0;
    if shrink <= 0.0 {
        return f64::INFINITY;
    }
    let torus_bound = sampled / shrink.sqrt();
    let lipschitz: f64 = basis
        .iter()
        .zip(coeffs)
        .map(|(a, c)| c.norm() * (a[0] as f64 - a[1] as f64).abs() * monomial_sup(spec, a))
        .sum();
    torus_bound + 0.5 * grid.log_step * lipschitz
}

/// Scale-invariant objective `d(p(x)/S, p(y)/S)²` with `S` the sampled sup, and its
/// Wirtinger gradient with respect to the conjugate coefficients.
struct AscentProblem<'a> {
    bx: Vec<Complex64>,
    by: Vec<Complex64>,
    samples: &'a [Vec<Complex64>],
}

impl AscentProblem<'_> {
    fn sup(&self, c: &[Complex64]) -> (f64, usize) {
        let mut best = (0.0, 0);
        for (k, row) in self.samples.iter().enumerate() {
            let v: Complex64 = row.iter().zip(c).map(|(b, c)| b * c).sum();
            let m = v.norm();
            if m > best.0 {
                best = (m, k);
            }
        }
        best
    }

    fn value(&self, c: &[Complex64]) -> f64 {
        let (s, _) = self.sup(c);
        if s == 0.0 {
            return 0.0;
        }
        let a: Complex64 = self.bx.iter().zip(c).map(|(b, c)| b * c).sum();
        let b: Complex64 = self.by.iter().zip(c).map(|(b, c)| b * c).sum();
        let d = crate::hyperbolic::pseudo_hyperbolic(a / s, b / s);
        d * d
    }

    fn gradient(&self, c: &[Complex64]) -> Vec<Complex64> {
        let (s, k_star) = self.sup(c);
        let one = Complex64::new(1.0, 0.0);
        let a: Complex64 = self.bx.iter().zip(c).map(|(b, c)| b * c).sum();
        let b: Complex64 = self.by.iter().zip(c).map(|(b, c)| b * c).sum();
        let p_star: Complex64 = self.samples[k_star].iter().zip(c).map(|(b, c)| b * c).sum();
        let (u, v) = (a / s, b / s);
        let num = (u - v).norm_sqr();
        let den = (one - u.conj() * v).norm_sqr();
        let d2 = den * den;
        let f_u = ((u - v).conj() * den + num * v.conj() * (one - u.conj() * v)) / d2;
        let f_v = (-(u - v).conj() * den + num * u.conj() * (one - u * v.conj())) / d2;
        self.bx
            .iter()
            .zip(&self.by)
            .zip(&self.samples[k_star])
            .map(|((bx, by), bs)| {
                let ds = p_star * bs.conj() / (2.0 * s);
                let du = -u / s * ds;
                let dv = -v / s * ds;
                let du_bar = bx.conj() / s - u.conj() / s * ds;
                let dv_bar = by.conj() / s - v.conj() / s * ds;
                // F is real, so ∂F/∂c̄ = F_u ∂u/∂c̄ + conj(F_u) ∂ū/∂c̄ + (same for v)
                f_u * du + f_u.conj() * du_bar + f_v * dv + f_v.conj() * dv_bar
            })
            .collect()
    }
}

fn normalize(c: &mut [Complex64]) {
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        c.iter_mut().for_each(|v| *v /= norm);
    }
}

fn ascend(problem: &AscentProblem, mut c: Vec<Complex64>, iterations: usize) -> (Vec<Complex64>, f64) {
    normalize(&mut c);
    let mut f = problem.value(&c);
    let mut step = 0.1;
    for _ in 0..iterations {
        let g = problem.gradient(&c);
        let gnorm = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial: Vec<Complex64> =
                c.iter().zip(&g).map(|(c, g)| c + g * (step / gnorm)).collect();
            normalize(&mut trial);
            let ft = problem.value(&trial);
            if ft > f {
                c = trial;
                f = ft;
                step = (step * 1.5).min(1.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (c, f)
}

fn is_diagonal(p: &DomainPoint) -> bool {
    p.coords.iter().all(|c| (c - p.coords[0]).norm() == 0.0)
}

fn optimize_polynomial(
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &FamilyConfig,
    incumbent: &BoundCertificate,
) -> Option<BoundCertificate> {
    let basis = multi_indices(2, 1, cfg.degree_cap);
    let eval_basis = |z: &[Complex64]| -> Vec<Complex64> {
        basis.iter().map(|a| monomial(a, z)).collect()
    };
    let search_grid = TorusGrid::new(spec, 10, 12);
    let mut samples = Vec::new();
    search_grid.for_each_point(|z| samples.push(eval_basis(&z)));
    let problem = AscentProblem {
        bx: eval_basis(&x.coords),
        by: eval_basis(&y.coords),
        samples: &samples,
    };

    // start 0 is the incumbent map expressed in the polynomial basis
    let mut start0 = vec![Complex64::new(0.0, 0.0); basis.len()];
    if let Witness::Map(m) = &incumbent.witness {
        let alpha = match &m.kind {
            MapKind::CoordinateProjection { index } => {
                let mut a = vec![0; 2];
                a[*index] = 1;
                Some(a)
            }
            MapKind::Chi => Some(vec![1, 1]),
            MapKind::Monomial { alpha } => Some(alpha.clone()),
            MapKind::Polynomial { .. } => None,
        };
        if let Some(pos) = alpha.and_then(|a| basis.iter().position(|b| *b == a)) {
            start0[pos] = Complex64::new(1.0, 0.0);
        }
    }
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    for start in 0..cfg.starts.max(1) {
        let init = if start == 0 {
            start0.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(start as u64));
            start0
                .iter()
                .map(|c| c + Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)))
                .collect()
        };
        if init.iter().all(|c| c.norm() == 0.0) {
            continue;
        }
        let (c, f) = ascend(&problem, init, cfg.iterations);
        if best.as_ref().map_or(true, |b| f > b.1) {
            best = Some((c, f));
        }
    }
    let (coeffs, _) = best?;
    let mut candidates = vec![coeffs.clone()];
    if is_diagonal(x) && is_diagonal(y) {
        // ½(f(z1, z2) + f(z2, z1)) keeps f(x), f(y) and does not increase the sup
        let sym: Vec<Complex64> = basis
            .iter()
            .zip(&coeffs)
            .map(|(a, c)| {
                let swapped = basis.iter().position(|b| b[0] == a[1] && b[1] == a[0]).unwrap();
                (c + coeffs[swapped]) * 0.5
            })
            .collect();
        candidates.push(sym);
    }
    let cert_grid = TorusGrid::new(spec, 128, 64);
    candidates
        .into_iter()
        .filter_map(|c| {
            let sup = certified_poly_sup(spec, &basis, &c, &cert_grid);
            if !(sup.is_finite() && sup > 0.0) {
                return None;
            }
            let terms = basis
                .iter()
                .zip(&c)
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(a, c)| PolyTerm {
                    exponents: a.clone(),
                    coefficient: *c,
                })
                .collect();
            let map = HolMapToDisk {
                kind: MapKind::Polynomial { terms },
                raw_sup: sup,
                scale: sup * (1.0 + cfg.eta),
                exact: false,
            };
            Some(map.certificate(x, y, cfg.eta))
        })
        .max_by(|a, b| a.value().total_cmp(&b.value()))
}

// ---------------------------------------------------------------------------
// Monomial sup norms on the exhaustion S_l.

/// `φ_l` and its derivatives in log-moduli `s_j = log t_j` over the support `J` of α
/// (coordinates outside `J` are set to zero, which only relaxes the constraint).
struct LogExhaustion<'a> {
    level: &'a ExhaustionLevel,
    n: usize,
    support: Vec<usize>,
}

impl LogExhaustion<'_> {
    /// Returns (φ, ∇φ, ∇²φ) at `s` (indexed over the support).
    fn eval(&self, s: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let k = s.len();
        let lv = self.level;
        let beta = lv.beta;
        // each term: (value a, gradient of a, hessian of a) in units before multiplying by β
        let mut terms: Vec<(f64, Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
        for j in 0..k {
            let e = (2.0 * s[j]).exp() / (lv.r_l * lv.r_l);
            let mut g = vec![0.0; k];
            g[j] = 2.0 * e;
            let mut h = vec![vec![0.0; k]; k];
            h[j][j] = 4.0 * e;
            terms.push((e - 1.0, g, h));
        }
        let constant_terms = self.n - k;
        if lv.product_term {
            if k == self.n {
                let e = (2.0 * s.iter().sum::<f64>()).exp() / (lv.eps_l * lv.eps_l);
                terms.push((e - 1.0, vec![2.0 * e; k], vec![vec![4.0 * e; k]; k]));
            } else {
                terms.push((-1.0, vec![0.0; k], vec![vec![0.0; k]; k]));
            }
        }
        for _ in 0..constant_terms {
            terms.push((-1.0, vec![0.0; k], vec![vec![0.0; k]; k]));
        }
        let m = terms.iter().map(|t| beta * t.0).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = terms.iter().map(|t| (beta * t.0 - m).exp()).collect();
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
        let lse = (m + total.ln()) / beta;
        let mut grad = vec![0.0; k];
        let mut hess = vec![vec![0.0; k]; k];
        for (t, wt) in terms.iter().zip(&w) {
            for a in 0..k {
                grad[a] += wt * t.1[a];
                for b in 0..k {
                    hess[a][b] += wt * (t.2[a][b] + beta * t.1[a] * t.1[b]);
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                hess[a][b] -= beta * grad[a] * grad[b];
            }
        }
        let mut phi = lse;
        for j in 0..k {
            let e = (2.0 * s[j]).exp();
            phi += lv.mu * e;
            grad[j] += 2.0 * lv.mu * e;
            hess[j][j] += 4.0 * lv.mu * e;
        }
        (phi, grad, hess)
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Maximizes `α·s - λ φ(s)` (strictly concave) by damped Newton; returns (max value, φ at argmax).
fn inner_max(problem: &LogExhaustion, alpha: &[f64], lambda: f64, s: &mut Vec<f64>) -> (f64, f64) {
    let objective = |s: &[f64]| -> (f64, f64) {
        let (phi, _, _) = problem.eval(s);
        (alpha.iter().zip(s).map(|(a, s)| a * s).sum::<f64>() - lambda * phi, phi)
    };
    for _ in 0..200 {
        let (phi, grad, hess) = problem.eval(s);
        let g: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a - lambda * g).collect();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let current = alpha.iter().zip(s.iter()).map(|(a, s)| a * s).sum::<f64>() - lambda * phi;
        if gnorm < 1e-13 * (1.0 + alpha.iter().sum::<f64>()) {
            return (current, phi);
        }
        let neg_h: Vec<Vec<f64>> = hess.iter().map(|r| r.iter().map(|v| lambda * v).collect()).collect();
        let dir = solve_dense(neg_h, g.clone()).unwrap_or(g);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = s.iter().zip(&dir).map(|(s, d)| s + t * d).collect();
            if objective(&trial).0 >= current || t < 1e-12 {
                *s = trial;
                break;
            }
            t *= 0.5;
        }
    }
    let (value, phi) = objective(s);
    (value, phi)
}

/// Upper bound for `sup_{S_l} |z^α|` by Lagrangian duality in log coordinates.
pub fn exhaustion_monomial_sup(level: &ExhaustionLevel, n: usize, alpha: &[u32]) -> f64 {
    let support: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0).collect();
    let a: Vec<f64> = support.iter().map(|&i| alpha[i] as f64).collect();
    let problem = LogExhaustion {
        level,
        n,
        support: support.clone(),
    };
    debug_assert_eq!(problem.support.len(), a.len());
    let mut s = vec![(0.5 * level.r_l).ln(); a.len()];
    // φ(s*(λ)) decreases in λ; bisect in log λ for the active constraint
    let (mut lo, mut hi) = (-20.0f64, 20.0f64);
    let mut best = f64::INFINITY;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (g, phi) = inner_max(&problem, &a, mid.exp(), &mut s);
        best = best.min(g);
        if phi > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 || phi.abs() < 1e-15 {
            break;
        }
    }
    // every dual value bounds the primal maximum; keep a tiny safety margin
    (best + 1e-12 * (1.0 + best.abs())).exp()
}

/// Monomial-family lower bound for `c_{S_l}`.
pub fn caratheodory_on_exhaustion(
    level: &ExhaustionLevel,
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &FamilyConfig,
) -> Result<BoundCertificate> {
    spec.check_dim(x)?;
    spec.check_dim(y)?;
    for p in [x, y] {
        if !level.contains(p) {
            return Err(LabError::OutsideDomain(format!(
                "{p:?} is not in the exhaustion level {}",
                level.l
            )));
        }
    }
    if x == y {
        return Ok(BoundCertificate::lower(0.0, Witness::Trivial, 0.0));
    }
    let (x, y) = canonical_pair(x, y);
    let mut best: Option<BoundCertificate> = None;
    for alpha in multi_indices(spec.n, 1, cfg.degree_cap) {
        let sup = exhaustion_monomial_sup(level, spec.n, &alpha);
        let map = HolMapToDisk {
            kind: MapKind::Monomial { alpha },
            raw_sup: sup,
            scale: sup,
            exact: false,
        };
        let cert = map.certificate(x, y, 1e-12);
        best = Some(match best {
            Some(b) => better(b, cert),
            None => cert,
        });
    }
    Ok(best.expect("degree cap >= 1 yields at least one monomial"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theorem_a_spec() -> DomainSpec {
        DomainSpec::new(2, 0.8, 1.0, 0.05).unwrap()
    }

    #[test]
    fn chi_example() {
        let s = theorem_a_spec();
        let c = chi_lower_bound(&s, &DomainPoint::origin(2), &DomainPoint::diagonal(2, 0.2)).unwrap();
        assert!((c.value() - 0.8f64.atanh()).abs() < 1e-12);
        let axis = DomainPoint::from_real(&[0.0, 0.5]);
        let c = chi_lower_bound(&s, &DomainPoint::origin(2), &axis).unwrap();
        assert_eq!(c.value(), 0.0);
    }

    #[test]
    fn projection_examples() {
        let s = DomainSpec::new(2, 0.4, 0.5, 0.05).unwrap();
        let c = projection_lower_bound(&s, &DomainPoint::from_real(&[0.25, 0.0]), &DomainPoint::origin(2), 0)
            .unwrap();
        assert!((c.value() - 0.5f64.atanh()).abs() < 1e-12);
        assert!(projection_lower_bound(&s, &DomainPoint::origin(2), &DomainPoint::origin(2), 2).is_err());
    }

    #[test]
    fn monomial_examples() {
        let s = theorem_a_spec();
        assert!((normalize_monomial(&s, &[1, 1]).unwrap().raw_sup - 0.05).abs() < 1e-15);
        assert_eq!(normalize_monomial(&s, &[1, 0]).unwrap().raw_sup, 1.0);
        let s2 = DomainSpec::new(2, 0.4, 0.5, 0.05).unwrap();
        assert!((normalize_monomial(&s2, &[2, 1]).unwrap().raw_sup - 0.025).abs() < 1e-15);
        assert!(normalize_monomial(&s, &[0, 0]).is_err());
        assert!(normalize_monomial(&s, &[1]).is_err());
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 1, 4).len(), 14);
        assert_eq!(multi_indices(3, 2, 2).len(), 6);
        assert!(multi_indices(2, 1, 2).contains(&vec![1, 1]));
    }

    #[test]
    fn ascent_gradient_matches_finite_differences() {
        let s = theorem_a_spec();
        let basis = multi_indices(2, 1, 3);
        let grid = TorusGrid::new(&s, 6, 8);
        let mut samples = Vec::new();
        grid.for_each_point(|z| samples.push(basis.iter().map(|a| monomial(a, &z)).collect()));
        let x = [Complex64::new(0.1, 0.05), Complex64::new(0.2, 0.0)];
        let y = [Complex64::new(-0.15, 0.1), Complex64::new(0.05, -0.1)];
        let p = AscentProblem {
            bx: basis.iter().map(|a| monomial(a, &x)).collect(),
            by: basis.iter().map(|a| monomial(a, &y)).collect(),
            samples: &samples,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<Complex64> = basis
            .iter()
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let g = p.gradient(&c);
        let h = 1e-7;
        for k in 0..basis.len() {
            for (dir, comp) in [(Complex64::new(1.0, 0.0), g[k].re), (Complex64::new(0.0, 1.0), g[k].im)] {
                let mut cp = c.clone();
                cp[k] += dir * h;
                let mut cm = c.clone();
                cm[k] -= dir * h;
                let fd = (p.value(&cp) - p.value(&cm)) / (2.0 * h);
                // real gradient = 2 ∂F/∂c̄
                assert!((fd - 2.0 * comp).abs() < 1e-5 * (1.0 + fd.abs()), "k={k} fd={fd} an={}", 2.0 * comp);
            }
        }
    }

    #[test]
    fn exhaustion_sup_of_coordinate_matches_one_dimensional_solve() {
        let s = theorem_a_spec();
        let lvl = ExhaustionLevel::standard(&s, 3).unwrap();
        let sup = exhaustion_monomial_sup(&lvl, 2, &[1, 0]);
        // φ(t, 0) = 0 solved by bisection in t
        let phi = |t: f64| lvl.defining_function(&DomainPoint::from_real(&[t, 0.0]));
        let (mut lo, mut hi) = (0.0, lvl.r_l);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if phi(m) < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!(sup >= lo && sup - lo < 1e-9, "sup {sup} vs {lo}");
    }
}
