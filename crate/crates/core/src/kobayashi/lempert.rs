//! Upper bounds on the Lempert function from certified analytic disks.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::DiskChain;
use super::disk::{certify_disk, exhaustion_slack, AnalyticDisk, LegDisk, SliceDisk};
use super::structured;
use crate::certificate::{BoundCertificate, Witness};
use crate::domain::{DomainPoint, DomainSpec, ExhaustionLevel};
use crate::error::{LabError, Result};
use crate::hyperbolic::artanh_guarded;
use crate::optim::Lbfgs;

/// When the log-linear structured disk family is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuredMode {
    Off,
    /// Only when the polynomial search certifies no disk.
    Fallback,
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptConfig {
    /// Degree of the free polynomial `q` per coordinate.
    pub degree: usize,
    /// Random starts per orientation.
    pub starts: usize,
    pub seed: u64,
    /// Minimum number of boundary angles used for certification.
    pub angles: usize,
    /// Required relative slack of certified disks.
    pub tolerance: f64,
    /// Quasi-Newton iterations per penalty stage.
    pub iterations: usize,
    pub structured: StructuredMode,
    /// Degree of the exponents in the structured family.
    pub structured_degree: usize,
    /// Coordinate descent on interior chain waypoints.
    pub refine_waypoints: bool,
    pub refine_sweeps: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            degree: 3,
            starts: 20,
            seed: 0,
            angles: 2048,
            tolerance: 1e-12,
            iterations: 150,
            structured: StructuredMode::Fallback,
            structured_degree: 32,
            refine_waypoints: true,
            refine_sweeps: 2,
        }
    }
}

/// Where disks must land: the domain itself or one exhaustion level.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Domain(&'a DomainSpec),
    Exhaustion(&'a DomainSpec, &'a ExhaustionLevel),
}

impl Target<'_> {
    pub fn spec(&self) -> &DomainSpec {
        match self {
            Target::Domain(s) | Target::Exhaustion(s, _) => s,
        }
    }

    pub fn contains(&self, z: &DomainPoint) -> Result<bool> {
        match self {
            Target::Domain(s) => s.contains(z),
            Target::Exhaustion(s, l) => {
                s.check_dim(z)?;
                Ok(l.contains(z))
            }
        }
    }

    /// Certified (domain) or sampled (exhaustion) slack of a polynomial disk.
    pub fn slack(&self, disk: &AnalyticDisk, angles: usize) -> f64 {
        // f64::min and max skip NaN, so a degenerate disk must be caught up front
        let finite = disk.coefficients.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite {
            return f64::NEG_INFINITY;
        }
        let s = match self {
            Target::Domain(s) => certify_disk(disk, s, angles).slack,
            Target::Exhaustion(_, l) => exhaustion_slack(disk, l, angles),
        };
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    }
}

/// Relative outward rounding of closed-form leg costs, so that an extremal disk never
/// reports a value a few ulps below the matching lower bound.
const CLOSED_FORM_ROUNDING: f64 = 1e-14;

pub(crate) fn closed_form_cost(b: f64) -> f64 {
    artanh_guarded(b).value * (1.0 + CLOSED_FORM_ROUNDING)
}

/// A certified leg: `disk(a)` is the start point and `disk(b)` the end point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLeg {
    pub disk: LegDisk,
    pub a: f64,
    pub b: f64,
    pub cost: f64,
    pub slack: f64,
}

impl ChainLeg {
    pub fn constant(p: &DomainPoint) -> Self {
        Self {
            disk: LegDisk::Polynomial(AnalyticDisk::constant(p)),
            a: 0.0,
            b: 0.0,
            cost: 0.0,
            slack: f64::INFINITY,
        }
    }

    fn from_polynomial(disk: AnalyticDisk, a: f64, b: f64, slack: f64) -> Self {
        let cost = artanh_guarded(crate::hyperbolic::pseudo_hyperbolic(
            Complex64::new(a, 0.0),
            Complex64::new(b, 0.0),
        ))
        .value;
        Self {
            disk: LegDisk::Polynomial(disk),
            a,
            b,
            cost,
            slack,
        }
    }

    pub fn reversed(mut self) -> Self {
        std::mem::swap(&mut self.a, &mut self.b);
        self
    }
}

/// Interpolation-form parameters `(σ, q)` of a disk from `x` to `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub sigma: f64,
    pub q: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LempertOutcome {
    Certified(BoundCertificate),
    NoValidDisk { best_violation: f64 },
}

impl LempertOutcome {
    pub fn value(&self) -> f64 {
        match self {
            LempertOutcome::Certified(c) => c.value(),
            LempertOutcome::NoValidDisk { .. } => f64::INFINITY,
        }
    }

    pub fn certificate(&self) -> Option<&BoundCertificate> {
        match self {
            LempertOutcome::Certified(c) => Some(c),
            LempertOutcome::NoValidDisk { .. } => None,
        }
    }
}

pub(crate) struct LegResult {
    pub leg: Option<ChainLeg>,
    pub best_violation: f64,
    /// Best polynomial-search parameters in the `x → y` orientation.
    pub warm: Option<WarmStart>,
}

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub(crate) fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1))
}

/// Largest `κ ∈ (0, 1]` such that `λ ↦ f(κλ)` is certified, by bisection (the image
/// shrinks with κ). Returns the rescaled leg `x → y` with endpoint `σ/κ`.
pub(crate) fn restore(target: Target, disk: &AnalyticDisk, sigma: f64, cfg: &OptConfig) -> Option<ChainLeg> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return None;
    }
    let slack = target.slack(disk, cfg.angles);
    if slack >= cfg.tolerance {
        return (sigma < 1.0).then(|| ChainLeg::from_polynomial(disk.clone(), 0.0, sigma, slack));
    }
    let (mut lo, mut hi) = (sigma, 1.0);
    let valid_lo = target.slack(&disk.rescaled(lo), cfg.angles) >= cfg.tolerance;
    if !valid_lo {
        return None;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if target.slack(&disk.rescaled(mid), cfg.angles) >= cfg.tolerance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scaled = disk.rescaled(lo);
    let slack = target.slack(&scaled, cfg.angles);
    let b = sigma / lo;
    (slack >= cfg.tolerance && b < 1.0).then(|| ChainLeg::from_polynomial(scaled, 0.0, b, slack))
}

/// Best affine disk `λ ↦ x + λ(y - x)/σ`: smallest certified σ by closed form on the
/// coordinates and bisection for the remaining constraints.
fn affine_leg(target: Target, x: &DomainPoint, y: &DomainPoint, cfg: &OptConfig) -> Option<ChainLeg> {
    let disk = |s: f64| AnalyticDisk::from_interpolation(x, y, s, &[]);
    let valid = |s: f64| target.slack(&disk(s), cfg.angles) >= cfg.tolerance;
    let mut lo = match target {
        Target::Domain(spec) => {
            let bound = spec.big_r * (1.0 - cfg.tolerance);
            let mut s = 0.0f64;
            for (xj, yj) in x.coords.iter().zip(&y.coords) {
                let room = bound - xj.norm();
                if room <= 0.0 {
                    return None;
                }
                s = s.max((yj - xj).norm() / room);
            }
            s * (1.0 + 4e-15)
        }
        Target::Exhaustion(..) => 0.0,
    };
    if lo >= 1.0 {
        return None;
    }
    let sigma = if lo > 0.0 && valid(lo) {
        lo
    } else {
        let mut hi = 1.0 - 1e-12;
        if !valid(hi) {
            return None;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if valid(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let d = disk(sigma);
    let slack = target.slack(&d, cfg.angles);
    Some(ChainLeg::from_polynomial(d, 0.0, sigma, slack))
}

/// Quadratic-penalty objective over `(logit σ, Re q, Im q)` on a coarse angle grid.
struct PenaltyProblem<'a> {
    target: Target<'a>,
    x: &'a DomainPoint,
    w: Vec<Complex64>,
    degree: usize,
    /// Powers `λ^k`, `k = 0..=degree + 2`, per sample angle.
    powers: Vec<Vec<Complex64>>,
    shrink: f64,
}

impl<'a> PenaltyProblem<'a> {
    fn new(target: Target<'a>, x: &'a DomainPoint, y: &DomainPoint, degree: usize) -> Self {
        let n = x.dim();
        let samples = (32 * n * (degree + 2)).max(128);
        let powers = (0..samples)
            .map(|k| {
                let lam = Complex64::from_polar(1.0, TAU * k as f64 / samples as f64);
                let mut p = Vec::with_capacity(degree + 3);
                let mut cur = Complex64::new(1.0, 0.0);
                for _ in 0..degree + 3 {
                    p.push(cur);
                    cur *= lam;
                }
                p
            })
            .collect();
        Self {
            target,
            x,
            w: x.coords.iter().zip(&y.coords).map(|(a, b)| b - a).collect(),
            degree,
            powers,
            shrink: 1.0 - 2e-3,
        }
    }

    fn nparams(&self) -> usize {
        1 + 2 * self.x.dim() * (self.degree + 1)
    }

    fn unpack(&self, p: &[f64]) -> (f64, Vec<Vec<Complex64>>) {
        let n = self.x.dim();
        let d = self.degree + 1;
        let q = (0..n)
            .map(|j| {
                (0..d)
                    .map(|k| {
                        let base = 1 + 2 * (j * d + k);
                        Complex64::new(p[base], p[base + 1])
                    })
                    .collect()
            })
            .collect();
        (sigmoid(p[0]), q)
    }

    fn pack(&self, start: &WarmStart) -> Vec<f64> {
        let mut p = vec![0.0; self.nparams()];
        p[0] = logit(start.sigma.clamp(1e-6, 1.0 - 1e-9));
        let d = self.degree + 1;
        for (j, qj) in start.q.iter().enumerate() {
            for (k, c) in qj.iter().enumerate().take(d) {
                let base = 1 + 2 * (j * d + k);
                p[base] = c.re;
                p[base + 1] = c.im;
            }
        }
        p
    }

    /// Penalty `Σ max(0, c)²` contributions and the holomorphic derivatives
    /// `G_j = ∂(penalty)/∂f_j` at one boundary point.
    fn constraint_terms(&self, f: &[Complex64], g: &mut [Complex64]) -> f64 {
        let n = f.len();
        g.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        // products of all coordinates but j, without division
        let mut others = vec![Complex64::new(1.0, 0.0); n];
        let mut acc = Complex64::new(1.0, 0.0);
        for j in 0..n {
            others[j] = acc;
            acc *= f[j];
        }
        let product = acc;
        acc = Complex64::new(1.0, 0.0);
        for j in (0..n).rev() {
            others[j] *= acc;
            acc *= f[j];
        }
        match self.target {
            Target::Domain(spec) => {
                let mut pen = 0.0;
                let r2 = (spec.big_r * self.shrink).powi(2);
                for j in 0..n {
                    let c = f[j].norm_sqr() / r2 - 1.0;
                    if c > 0.0 {
                        pen += c * c;
                        g[j] += 2.0 * c * f[j].conj() / r2;
                    }
                }
                if !spec.is_polydisk() {
                    let e2 = (spec.epsilon * self.shrink).powi(2);
                    let c = product.norm_sqr() / e2 - 1.0;
                    if c > 0.0 {
                        pen += c * c;
                        for j in 0..n {
                            g[j] += 2.0 * c * product.conj() * others[j] / e2;
                        }
                    }
                }
                pen
            }
            Target::Exhaustion(_, level) => {
                let z = DomainPoint::new(f.to_vec());
                let c = level.defining_function(&z) + 1e-3;
                if c <= 0.0 {
                    return 0.0;
                }
                let beta = level.beta;
                let r2 = level.r_l * level.r_l;
                let e2 = level.eps_l * level.eps_l;
                let mut terms: Vec<f64> = f.iter().map(|v| beta * (v.norm_sqr() / r2 - 1.0)).collect();
                if level.product_term {
                    terms.push(beta * (product.norm_sqr() / e2 - 1.0));
                }
                let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = terms.iter().map(|t| (t - m).exp()).collect();
                let total: f64 = weights.iter().sum();
                for j in 0..n {
                    let mut dphi = weights[j] / total * f[j].conj() / r2 + level.mu * f[j].conj();
                    if level.product_term {
                        dphi += weights[n] / total * product.conj() * others[j] / e2;
                    }
                    g[j] += 2.0 * c * dphi;
                }
                c * c
            }
        }
    }

    fn evaluate(&self, p: &[f64], grad: &mut [f64], weight: f64) -> f64 {
        let n = self.x.dim();
        let d = self.degree + 1;
        let (sigma, q) = self.unpack(p);
        grad.iter_mut().for_each(|v| *v = 0.0);
        let scale = weight / self.powers.len() as f64;
        let mut penalty = 0.0;
        let mut dsigma = 0.0;
        let mut f = vec![Complex64::new(0.0, 0.0); n];
        let mut df_dsigma = vec![Complex64::new(0.0, 0.0); n];
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        for pw in &self.powers {
            let lam = pw[1];
            for j in 0..n {
                let qv: Complex64 = q[j].iter().zip(pw).map(|(c, l)| c * l).sum();
                f[j] = self.x.coords[j] + lam / sigma * self.w[j] + lam * (lam - sigma) * qv;
                df_dsigma[j] = -lam / (sigma * sigma) * self.w[j] - lam * qv;
            }
            let pen = self.constraint_terms(&f, &mut g);
            if pen == 0.0 {
                continue;
            }
            penalty += pen;
            for j in 0..n {
                dsigma += 2.0 * (g[j] * df_dsigma[j]).re;
                for k in 0..d {
                    let basis = pw[k + 1] * (lam - sigma);
                    let gb = g[j] * basis;
                    let base = 1 + 2 * (j * d + k);
                    grad[base] += scale * 2.0 * gb.re;
                    grad[base + 1] -= scale * 2.0 * gb.im;
                }
            }
        }
        grad[0] = sigma * (1.0 - sigma) * (1.0 + scale * dsigma);
        sigma + scale * penalty
    }

    fn optimize(&self, start: &WarmStart, iterations: usize) -> (WarmStart, f64) {
        let mut p = self.pack(start);
        let mut violation = f64::INFINITY;
        for weight in [1e1, 1e2, 1e3, 1e4, 1e5, 1e6] {
            let solver = Lbfgs {
                max_iter: iterations,
                ..Default::default()
            };
            let (best, _) = solver.minimize(|p, g| self.evaluate(p, g, weight), p);
            p = best;
            let mut scratch = vec![0.0; p.len()];
            let total = self.evaluate(&p, &mut scratch, 1.0);
            violation = total - sigmoid(p[0]);
        }
        let (sigma, q) = self.unpack(&p);
        (WarmStart { sigma, q }, violation)
    }
}

fn random_start(rng: &mut ChaCha8Rng, n: usize, degree: usize, radius: f64) -> WarmStart {
    let sigma = rng.gen_range(0.3..0.97);
    let q = (0..n)
        .map(|_| {
            (0..=degree)
                .map(|_| {
                    Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)) * radius
                })
                .collect()
        })
        .collect();
    WarmStart { sigma, q }
}

fn canonical_order(x: &DomainPoint, y: &DomainPoint) -> bool {
    let key = |p: &DomainPoint| -> Vec<(f64, f64)> { p.coords.iter().map(|c| (c.re, c.im)).collect() };
    matches!(key(x).partial_cmp(&key(y)), Some(std::cmp::Ordering::Greater))
}

/// Largest allowed gap between a leg's endpoints and the points it claims to join.
const ENDPOINT_TOL: f64 = 1e-9;

fn keep_better(best: &mut Option<ChainLeg>, cand: Option<ChainLeg>, x: &DomainPoint, y: &DomainPoint) {
    if let Some(c) = cand {
        let start = c.disk.evaluate(Complex64::new(c.a, 0.0));
        let end = c.disk.evaluate(Complex64::new(c.b, 0.0));
        let joins = start.distance_to(x) <= ENDPOINT_TOL && end.distance_to(y) <= ENDPOINT_TOL;
        if joins && c.cost.is_finite() && best.as_ref().map_or(true, |b| c.cost < b.cost) {
            *best = Some(c);
        }
    }
}

/// Searches for the cheapest certified leg from `x` to `y`.
pub(crate) fn search_leg(
    target: Target,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &OptConfig,
    warm: &[WarmStart],
) -> LegResult {
    if x.distance_to(y) == 0.0 {
        return LegResult {
            leg: Some(ChainLeg::constant(x)),
            best_violation: 0.0,
            warm: None,
        };
    }
    // the result must not depend on argument order
    if canonical_order(x, y) {
        let flipped = search_leg_ordered(target, y, x, cfg, &[]);
        return LegResult {
            leg: flipped.leg.map(ChainLeg::reversed),
            best_violation: flipped.best_violation,
            warm: None,
        };
    }
    search_leg_ordered(target, x, y, cfg, warm)
}

fn search_leg_ordered(
    target: Target,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &OptConfig,
    warm: &[WarmStart],
) -> LegResult {
    let spec = target.spec();
    let n = spec.n;
    let mut best: Option<ChainLeg> = None;
    if let Target::Domain(_) = target {
        let (disk, b) = SliceDisk::through(spec.big_r, x, y);
        if disk.is_valid(spec) && b < 1.0 {
            let leg = ChainLeg {
                disk: LegDisk::Slice(disk),
                a: 0.0,
                b,
                cost: closed_form_cost(b),
                slack: 0.0,
            };
            // on a polydisk, or inside an axis slice (itself a polydisk), this disk is extremal
            let shared_zero = (0..n).any(|k| x.coords[k].norm() == 0.0 && y.coords[k].norm() == 0.0);
            if spec.is_polydisk() || shared_zero {
                return LegResult {
                    leg: Some(leg),
                    best_violation: 0.0,
                    warm: None,
                };
            }
            keep_better(&mut best, Some(leg), x, y);
        }
    }
    keep_better(&mut best, affine_leg(target, x, y, cfg), x, y);
    keep_better(&mut best, affine_leg(target, y, x, cfg).map(ChainLeg::reversed), x, y);

    let forward = PenaltyProblem::new(target, x, y, cfg.degree);
    let backward = PenaltyProblem::new(target, y, x, cfg.degree);
    let affine_sigma = best.as_ref().map_or(0.9, |l| l.a.max(l.b));
    let zero_q = vec![vec![Complex64::new(0.0, 0.0); cfg.degree + 1]; n];
    let mut jobs: Vec<(bool, WarmStart)> = Vec::new();
    for w in warm {
        jobs.push((true, w.clone()));
    }
    for s in 0..cfg.starts {
        for forward_dir in [true, false] {
            let start = if s == 0 {
                WarmStart {
                    sigma: affine_sigma,
                    q: zero_q.clone(),
                }
            } else {
                let mut rng = start_rng(cfg.seed, 2 * s + usize::from(!forward_dir));
                random_start(&mut rng, n, cfg.degree, spec.big_r)
            };
            jobs.push((forward_dir, start));
        }
    }
    let results: Vec<(bool, WarmStart, f64, Option<ChainLeg>)> = jobs
        .into_par_iter()
        .map(|(fwd, start)| {
            let problem = if fwd { &forward } else { &backward };
            let (params, violation) = problem.optimize(&start, cfg.iterations);
            let (p, q) = if fwd { (x, y) } else { (y, x) };
            let disk = AnalyticDisk::from_interpolation(p, q, params.sigma, &params.q);
            let leg = restore(target, &disk, params.sigma, cfg);
            let leg = if fwd { leg } else { leg.map(ChainLeg::reversed) };
            (fwd, params, violation, leg)
        })
        .collect();
    let mut best_violation = f64::INFINITY;
    let mut warm_out: Option<(f64, WarmStart)> = None;
    for (fwd, params, violation, leg) in results {
        best_violation = best_violation.min(violation.max(0.0));
        if fwd {
            if let Some(l) = &leg {
                if warm_out.as_ref().map_or(true, |(c, _)| l.cost < *c) {
                    warm_out = Some((l.cost, params));
                }
            }
        }
        keep_better(&mut best, leg, x, y);
    }

    let run_structured = match cfg.structured {
        StructuredMode::Off => false,
        StructuredMode::Fallback => best.is_none(),
        StructuredMode::Always => true,
    };
    if run_structured {
        if let Target::Domain(spec) = target {
            keep_better(&mut best, structured::structured_leg(spec, x, y, cfg), x, y);
        }
    }
    if best.is_some() {
        best_violation = 0.0;
    }
    LegResult {
        leg: best,
        best_violation,
        warm: warm_out.map(|(_, w)| w),
    }
}

fn leg_certificate(x: &DomainPoint, y: &DomainPoint, leg: ChainLeg, margin: f64) -> BoundCertificate {
    let cost = leg.cost;
    let chain = DiskChain {
        waypoints: vec![x.clone(), y.clone()],
        legs: vec![leg],
    };
    BoundCertificate::upper(cost, Witness::Chain(chain), margin)
}

pub(crate) fn outcome_from(x: &DomainPoint, y: &DomainPoint, res: LegResult, cfg: &OptConfig) -> LempertOutcome {
    match res.leg {
        Some(leg) if x.distance_to(y) == 0.0 => {
            let _ = leg;
            LempertOutcome::Certified(BoundCertificate::upper(0.0, Witness::Trivial, 0.0))
        }
        Some(leg) => LempertOutcome::Certified(leg_certificate(x, y, leg, cfg.tolerance)),
        None => LempertOutcome::NoValidDisk {
            best_violation: res.best_violation,
        },
    }
}

/// Upper certificate for `l_G(x, y)`, or a no-valid-disk status.
pub fn lempert_upper_bound(
    spec: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &OptConfig,
) -> Result<LempertOutcome> {
    spec.require_interior(x)?;
    spec.require_interior(y)?;
    let res = search_leg(Target::Domain(spec), x, y, cfg, &[]);
    Ok(outcome_from(x, y, res, cfg))
}

/// Upper certificate for the Lempert function of the exhaustion level `S_l`.
pub fn lempert_on_exhaustion(
    spec: &DomainSpec,
    level: &ExhaustionLevel,
    x: &DomainPoint,
    y: &DomainPoint,
    cfg: &OptConfig,
) -> Result<LempertOutcome> {
    let target = Target::Exhaustion(spec, level);
    for p in [x, y] {
        if !target.contains(p)? {
            return Err(LabError::OutsideDomain(format!(
                "{p:?} is not in the exhaustion level {}",
                level.l
            )));
        }
    }
    let res = search_leg(target, x, y, cfg, &[]);
    Ok(outcome_from(x, y, res, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let spec = DomainSpec::new(2, 0.8, 0.8, 0.1).unwrap();
        let x = DomainPoint::from_real(&[0.4, 0.0]);
        let y = DomainPoint::from_real(&[0.0, 0.4]);
        let problem = PenaltyProblem::new(Target::Domain(&spec), &x, &y, 2);
        let mut rng = start_rng(7, 0);
        let start = random_start(&mut rng, 2, 2, 1.5);
        let p = problem.pack(&start);
        let mut g = vec![0.0; p.len()];
        problem.evaluate(&p, &mut g, 10.0);
        let mut scratch = vec![0.0; p.len()];
        for i in 0..p.len() {
            let h = 1e-6;
            let mut pp = p.clone();
            pp[i] += h;
            let mut pm = p.clone();
            pm[i] -= h;
            let fd = (problem.evaluate(&pp, &mut scratch, 10.0) - problem.evaluate(&pm, &mut scratch, 10.0))
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-4 * (1.0 + fd.abs()), "param {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn exhaustion_penalty_gradient_matches_finite_differences() {
        let spec = DomainSpec::new(2, 0.8, 1.0, 0.05).unwrap();
        let level = ExhaustionLevel::standard(&spec, 2).unwrap();
        let x = DomainPoint::from_real(&[0.1, 0.1]);
        let y = DomainPoint::from_real(&[0.3, 0.0]);
        let problem = PenaltyProblem::new(Target::Exhaustion(&spec, &level), &x, &y, 1);
        let mut rng = start_rng(11, 0);
        let start = random_start(&mut rng, 2, 1, 0.8);
        let p = problem.pack(&start);
        let mut g = vec![0.0; p.len()];
        problem.evaluate(&p, &mut g, 3.0);
        let mut scratch = vec![0.0; p.len()];
        for i in 0..p.len() {
            let h = 1e-6;
            let mut pp = p.clone();
            pp[i] += h;
            let mut pm = p.clone();
            pm[i] -= h;
            let fd = (problem.evaluate(&pp, &mut scratch, 3.0) - problem.evaluate(&pm, &mut scratch, 3.0))
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-4 * (1.0 + fd.abs()), "param {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn polydisk_origin_pair_is_exact() {
        let spec = DomainSpec::new(2, 0.5, 0.9, 1.0).unwrap();
        let cfg = OptConfig {
            starts: 2,
            ..Default::default()
        };
        let y = DomainPoint::diagonal(2, 0.45);
        let out = lempert_upper_bound(&spec, &DomainPoint::origin(2), &y, &cfg).unwrap();
        assert!((out.value() - 0.5f64.atanh()).abs() < 1e-9, "{}", out.value());
    }

    #[test]
    fn coincident_points_cost_nothing() {
        let spec = DomainSpec::new(2, 0.8, 1.0, 0.05).unwrap();
        let p = DomainPoint::from_real(&[0.1, 0.2]);
        let out = lempert_upper_bound(&spec, &p, &p, &OptConfig::default()).unwrap();
        assert_eq!(out.value(), 0.0);
    }
}
