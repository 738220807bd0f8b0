//! The Reinhardt domains `G = {z : |z_i| < R, |z_1 ⋯ z_n| < ε}`, their parameter
//! windows and a smooth strictly plurisubharmonic exhaustion.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Parameters `(n, r, R, ε)` of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub n: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub epsilon: f64,
}

impl DomainSpec {
    pub fn new(n: usize, r: f64, big_r: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            n,
            r,
            big_r,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(LabError::InvalidParameter(format!(
                "dimension n = {} must be at least 2",
                self.n
            )));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "inner radius r = {} must lie in (0, 1)",
                self.r
            )));
        }
        if !(self.big_r >= self.r && self.big_r <= 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "outer radius R = {} must lie in [r, 1]",
                self.big_r
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "product cap epsilon = {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Same domain with a different product cap.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.n, self.r, self.big_r, epsilon)
    }

    /// True when the product constraint is implied by the box constraints.
    pub fn is_polydisk(&self) -> bool {
        self.epsilon >= self.big_r.powi(self.n as i32)
    }

    pub fn contains(&self, z: &DomainPoint) -> Result<bool> {
        self.check_dim(z)?;
        Ok(z.coords.iter().all(|c| c.norm() < self.big_r) && z.product().norm() < self.epsilon)
    }

    pub(crate) fn check_dim(&self, z: &DomainPoint) -> Result<()> {
        if z.coords.len() != self.n {
            return Err(LabError::DimensionMismatch {
                expected: self.n,
                got: z.coords.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_interior(&self, z: &DomainPoint) -> Result<()> {
        if !self.contains(z)? {
            return Err(LabError::OutsideDomain(format!("{z:?}")));
        }
        Ok(())
    }

    /// First-order Euclidean slack to the nearest constraint surface.
    pub fn boundary_distance(&self, z: &DomainPoint) -> Result<f64> {
        self.require_interior(z)?;
        let box_slack = z
            .coords
            .iter()
            .map(|c| self.big_r - c.norm())
            .fold(f64::INFINITY, f64::min);
        let grad_sq: f64 = (0..self.n)
            .map(|i| {
                z.coords
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, c)| c.norm())
                    .product::<f64>()
                    .powi(2)
            })
            .sum();
        let product_slack = if grad_sq > 0.0 {
            (self.epsilon - z.product().norm()) / grad_sq.sqrt()
        } else {
            f64::INFINITY
        };
        Ok(box_slack.min(product_slack))
    }

    /// Uniform-ish random interior point: moduli drawn in the box, rejected against the cap.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> DomainPoint {
        loop {
            let coords: Vec<Complex64> = (0..self.n)
                .map(|_| {
                    let t = self.big_r * rng.gen::<f64>().sqrt() * 0.999;
                    Complex64::from_polar(t, rng.gen::<f64>() * std::f64::consts::TAU)
                })
                .collect();
            let z = DomainPoint::new(coords);
            if z.product().norm() < self.epsilon * 0.999 {
                return z;
            }
        }
    }
}

/// A point of `ℂⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub coords: Vec<Complex64>,
}

impl DomainPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn origin(n: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// `(x, …, x)` with `n` coordinates.
    pub fn diagonal(n: usize, x: f64) -> Self {
        Self::from_real(&vec![x; n])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn product(&self) -> Complex64 {
        self.coords
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, c| acc * c)
    }

    pub fn distance_to(&self, other: &DomainPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Which theorem a threshold report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    A,
    B,
}

/// Parameter window `x_lower < |x| < x_upper` for diagonal points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub theorem: Theorem,
    pub n: usize,
    pub r: f64,
    pub epsilon: f64,
    /// Admissible upper bound on ε for Theorem A; equals ε itself for Theorem B.
    pub epsilon_bound: f64,
    pub x_lower: f64,
    pub x_upper: f64,
    pub window_nonempty: bool,
    pub parameters_valid: bool,
    /// Theorem B necessary condition on r; absent for Theorem A.
    pub necessary_condition: Option<bool>,
    pub diagnostic: Option<String>,
}

/// Windows narrower than rounding are reported empty: at exact ties such as
/// `nε/r = ε^(1/n)` the two sides come out a few ulps apart.
fn window_open(lo: f64, hi: f64) -> bool {
    hi - lo > 1e-12 * hi.abs()
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "inner radius r = {r} must lie in (0, 1)"
        )));
    }
    Ok(())
}

pub fn theorem_a_window(n: usize, r: f64, epsilon: f64) -> Result<ThresholdReport> {
    if n < 2 {
        return Err(LabError::InvalidParameter(format!("n = {n} must be at least 2")));
    }
    check_radius(r)?;
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let nf = n as f64;
    let eps_max = (r * r / nf).min((r / nf).powf(nf / (nf - 1.0)));
    let x_lower = nf * epsilon / r;
    let x_upper = r.min(epsilon.powf(1.0 / nf));
    let valid = epsilon < eps_max;
    Ok(ThresholdReport {
        theorem: Theorem::A,
        n,
        r,
        epsilon,
        epsilon_bound: eps_max,
        x_lower,
        x_upper,
        window_nonempty: window_open(x_lower, x_upper),
        parameters_valid: valid,
        necessary_condition: None,
        diagnostic: (!valid)
            .then(|| format!("epsilon = {epsilon} is not below epsilon_max = {eps_max}")),
    })
}

pub fn theorem_b_window(n: usize, r: f64) -> Result<ThresholdReport> {
    if n < 3 {
        return Err(LabError::InvalidParameter(format!("n = {n} must be at least 3")));
    }
    check_radius(r)?;
    let nf = n as f64;
    let epsilon = r.powi(n as i32);
    let x_lower =
        2f64.sqrt() * nf * (2.0 * nf).powf(1.0 / (2.0 * nf)) * r.powf((nf * nf - nf - 1.0) / nf);
    let x_upper = r;
    let lhs = r.powi((n * n - 2 * n - 1) as i32);
    let rhs = 1.0 / ((nf * 2f64.powi(n as i32 + 1)).sqrt() * nf.powi(n as i32));
    let condition = lhs < rhs;
    Ok(ThresholdReport {
        theorem: Theorem::B,
        n,
        r,
        epsilon,
        epsilon_bound: epsilon,
        x_lower,
        x_upper,
        window_nonempty: window_open(x_lower, x_upper),
        parameters_valid: true,
        necessary_condition: Some(condition),
        diagnostic: (!condition).then(|| {
            format!("necessary condition r^(n^2-2n-1) = {lhs:.6e} < {rhs:.6e} fails")
        }),
    })
}

/// One member `S_l = {φ_l < 0}` of the exhaustion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionLevel {
    pub l: u32,
    pub r_l: f64,
    pub eps_l: f64,
    pub beta: f64,
    pub mu: f64,
    /// Whether the product constraint enters φ_l (it is redundant on polydisks).
    pub product_term: bool,
}

pub const DEFAULT_BETA: f64 = 50.0;
pub const DEFAULT_MU: f64 = 1e-3;

impl ExhaustionLevel {
    /// Level `l ≥ 1` with radii shrunk by `1 - 2^{-l}`, softness `50 l` and weight `10⁻³ / l`.
    pub fn standard(spec: &DomainSpec, l: u32) -> Result<Self> {
        if l == 0 {
            return Err(LabError::InvalidParameter("exhaustion level must be >= 1".into()));
        }
        let shrink = 1.0 - 0.5f64.powi(l as i32);
        Ok(Self {
            l,
            r_l: spec.big_r * shrink,
            eps_l: spec.epsilon * shrink,
            beta: DEFAULT_BETA * l as f64,
            mu: DEFAULT_MU / l as f64,
            product_term: !spec.is_polydisk(),
        })
    }

    /// `φ_l(z)`, evaluated with a max-shifted log-sum-exp.
    pub fn defining_function(&self, z: &DomainPoint) -> f64 {
        let mut terms: Vec<f64> = z
            .coords
            .iter()
            .map(|c| self.beta * (c.norm_sqr() / (self.r_l * self.r_l) - 1.0))
            .collect();
        if self.product_term {
            terms.push(self.beta * (z.product().norm_sqr() / (self.eps_l * self.eps_l) - 1.0));
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
        let norm_sq: f64 = z.coords.iter().map(|c| c.norm_sqr()).sum();
        lse / self.beta + self.mu * norm_sq
    }

    pub fn contains(&self, z: &DomainPoint) -> bool {
        self.defining_function(z) < 0.0
    }
}

pub fn exhaustion_defining_function(
    level: &ExhaustionLevel,
    spec: &DomainSpec,
    z: &DomainPoint,
) -> Result<f64> {
    spec.check_dim(z)?;
    Ok(level.defining_function(z))
}
