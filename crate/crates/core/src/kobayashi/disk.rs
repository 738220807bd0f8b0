//! Analytic disks and their certified containment.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainPoint, DomainSpec, ExhaustionLevel};
use crate::hyperbolic::mobius_inverse;

pub(crate) fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &ci| acc * z + ci)
}

pub(crate) fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn trim(c: &[Complex64]) -> &[Complex64] {
    let len = c.iter().rposition(|v| v.norm() > 0.0).map_or(0, |p| p + 1);
    &c[..len]
}

/// Rigorous upper bound for `max_{|λ|=1} |p(λ)|`.
///
/// Degrees 0 and 1 are exact. Otherwise `|p|²` is a real trigonometric polynomial of
/// degree `d`, and Bernstein's inequality at its maximizer gives
/// `M² ≤ M_sampled² / (1 - d² Δθ² / 8)`; the grid is refined until `d² Δθ² / 8 ≤ 10⁻⁴`.
pub fn circle_max(coeffs: &[Complex64], angles: usize) -> f64 {
    let c = trim(coeffs);
    match c.len() {
        0 => 0.0,
        1 => c[0].norm(),
        2 => c[0].norm() + c[1].norm(),
        len => {
            let d = (len - 1) as f64;
            let mut a = angles.max(16);
            while d * d * (TAU / a as f64).powi(2) / 8.0 > 1e-4 {
                a *= 2;
            }
            let dtheta = TAU / a as f64;
            let sampled = (0..a)
                .map(|k| horner(c, Complex64::from_polar(1.0, dtheta * k as f64)).norm())
                .fold(0.0, f64::max);
            let factor = 1.0 - d * d * dtheta * dtheta / 8.0;
            sampled / factor.sqrt() * (1.0 + 1e-14)
        }
    }
}

/// A polynomial disk `λ ↦ (p_1(λ), …, p_n(λ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDisk {
    /// Per-coordinate coefficients in increasing degree.
    pub coefficients: Vec<Vec<Complex64>>,
    pub validity_margin: f64,
}

impl AnalyticDisk {
    pub fn constant(p: &DomainPoint) -> Self {
        Self {
            coefficients: p.coords.iter().map(|&c| vec![c]).collect(),
            validity_margin: 0.0,
        }
    }

    /// `λ ↦ x + (λ/σ)(y - x) + λ(λ - σ) q(λ)`, interpolating `f(0) = x`, `f(σ) = y`.
    pub fn from_interpolation(x: &DomainPoint, y: &DomainPoint, sigma: f64, q: &[Vec<Complex64>]) -> Self {
        let coefficients = (0..x.dim())
            .map(|j| {
                let qj: &[Complex64] = q.get(j).map_or(&[], |v| v.as_slice());
                let mut c = vec![Complex64::new(0.0, 0.0); qj.len() + 2];
                c[0] = x.coords[j];
                c[1] = (y.coords[j] - x.coords[j]) / sigma;
                for (k, qk) in qj.iter().enumerate() {
                    c[k + 2] += qk;
                    c[k + 1] -= sigma * qk;
                }
                c
            })
            .collect();
        Self {
            coefficients,
            validity_margin: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .map(|c| trim(c).len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, lambda: Complex64) -> DomainPoint {
        DomainPoint::new(self.coefficients.iter().map(|c| horner(c, lambda)).collect())
    }

    /// `λ ↦ f(κ λ)`.
    pub fn rescaled(&self, kappa: f64) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .map(|c| {
                let mut pow = 1.0;
                c.iter()
                    .map(|&ck| {
                        let v = ck * pow;
                        pow *= kappa;
                        v
                    })
                    .collect()
            })
            .collect();
        Self {
            coefficients,
            validity_margin: self.validity_margin,
        }
    }

    pub fn product_coefficients(&self) -> Vec<Complex64> {
        self.coefficients
            .iter()
            .fold(vec![Complex64::new(1.0, 0.0)], |acc, c| poly_mul(&acc, trim(c)))
    }
}

/// Certified maxima of a disk on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub coordinate_max: Vec<f64>,
    /// `None` when the product constraint is implied by the box constraints.
    pub product_max: Option<f64>,
    /// Smallest relative slack `1 - value/bound` over all constraints.
    pub slack: f64,
}

/// Certifies `f(𝔻̄) ⊂ G` through the maximum principle on `|λ| = 1`.
pub fn certify_disk(disk: &AnalyticDisk, spec: &DomainSpec, angles: usize) -> Containment {
    let coordinate_max: Vec<f64> = disk.coefficients.iter().map(|c| circle_max(c, angles)).collect();
    let mut slack = coordinate_max
        .iter()
        .map(|m| 1.0 - m / spec.big_r)
        .fold(f64::INFINITY, f64::min);
    let product_max = if spec.is_polydisk() {
        None
    } else {
        let pm = circle_max(&disk.product_coefficients(), angles);
        slack = slack.min(1.0 - pm / spec.epsilon);
        Some(pm)
    };
    Containment {
        coordinate_max,
        product_max,
        slack,
    }
}

/// Sampled slack `-max φ_l(f(e^{iθ}))` of a disk in the exhaustion level, minus the
/// largest jump between neighbouring samples as an allowance for unsampled angles.
pub fn exhaustion_slack(disk: &AnalyticDisk, level: &ExhaustionLevel, angles: usize) -> f64 {
    let a = angles.max(64).max(16 * disk.degree());
    let values: Vec<f64> = (0..a)
        .map(|k| {
            let z = disk.evaluate(Complex64::from_polar(1.0, TAU * k as f64 / a as f64));
            level.defining_function(&z)
        })
        .collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let jump = (0..a)
        .map(|k| (values[k] - values[(k + 1) % a]).abs())
        .fold(0.0, f64::max);
    -(max + jump)
}

/// A disk inside the axis slice `{z_k = 0}` built from Möbius maps:
/// `f_i(λ) = R (λ w_i + a_i) / (1 + ā_i λ w_i)` with `a_i = w_i = 0` on slice coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDisk {
    pub radius: f64,
    pub centers: Vec<Complex64>,
    pub directions: Vec<Complex64>,
}

impl SliceDisk {
    /// Extremal disk of the polydisk `(R𝔻)ⁿ` from `p` (at λ = 0) to `q` (at λ = b),
    /// `b = max_i` pseudo-hyperbolic distance of the scaled coordinates.
    pub fn through(radius: f64, p: &DomainPoint, q: &DomainPoint) -> (Self, f64) {
        let a: Vec<Complex64> = p.coords.iter().map(|c| c / radius).collect();
        let c: Vec<Complex64> = q.coords.iter().map(|c| c / radius).collect();
        let phi: Vec<Complex64> = a
            .iter()
            .zip(&c)
            .map(|(a, c)| (c - a) / (Complex64::new(1.0, 0.0) - a.conj() * c))
            .collect();
        let b = phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let directions = phi
            .iter()
            .map(|v| if b > 0.0 { v / b } else { Complex64::new(0.0, 0.0) })
            .collect();
        (
            Self {
                radius,
                centers: a,
                directions,
            },
            b,
        )
    }

    pub fn evaluate(&self, lambda: Complex64) -> DomainPoint {
        DomainPoint::new(
            self.centers
                .iter()
                .zip(&self.directions)
                .map(|(a, w)| self.radius * mobius_inverse(*a, lambda * w))
                .collect(),
        )
    }

    /// Rigorous containment in `G`: each coordinate maps 𝔻 into R𝔻, and the product of
    /// the coordinate suprema `R(|w_i| + |a_i|)/(1 + |a_i||w_i|)` stays below ε.
    pub fn is_valid(&self, spec: &DomainSpec) -> bool {
        if !(self.directions.iter().all(|w| w.norm() <= 1.0 + 1e-15) && self.centers.iter().all(|a| a.norm() < 1.0)) {
            return false;
        }
        if spec.is_polydisk() {
            return true;
        }
        let product: f64 = self
            .centers
            .iter()
            .zip(&self.directions)
            .map(|(a, w)| {
                let (a, w) = (a.norm(), w.norm().min(1.0));
                self.radius * (w + a) / (1.0 + a * w)
            })
            .product();
        product < spec.epsilon
    }
}

/// One leg of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LegDisk {
    Polynomial(AnalyticDisk),
    Slice(SliceDisk),
}

impl LegDisk {
    pub fn evaluate(&self, lambda: Complex64) -> DomainPoint {
        match self {
            LegDisk::Polynomial(d) => d.evaluate(lambda),
            LegDisk::Slice(d) => d.evaluate(lambda),
        }
    }

    /// Coordinate `k` vanishes identically (to `tol`).
    pub fn vanishes_in(&self, k: usize, tol: f64) -> bool {
        match self {
            LegDisk::Polynomial(d) => d.coefficients[k].iter().all(|c| c.norm() <= tol),
            LegDisk::Slice(d) => d.centers[k].norm() <= tol && d.directions[k].norm() <= tol,
        }
    }
}
