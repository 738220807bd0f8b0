//! Poincaré geometry of the unit disk and of scaled disks `R𝔻`.
//!
//! Distances use the curvature `-4` normalization: `ρ(a, b) = artanh |(a-b)/(1-āb)|`
//! with infinitesimal density `|X| / (1 - |z|²)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Pseudo-hyperbolic quotients at or above this value are treated as saturated.
pub const SATURATION_THRESHOLD: f64 = 1.0 - 1e-15;

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(value: Complex64) -> Result<Self> {
        if !(value.norm() < 1.0) {
            return Err(LabError::OutsideDomain(format!(
                "|{value}| >= 1 is not in the unit disk"
            )));
        }
        Ok(Self(value))
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    pub fn origin() -> Self {
        Self(Complex64::new(0.0, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// A nonnegative hyperbolic length. `saturated` marks values capped near the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicLength {
    pub value: f64,
    pub saturated: bool,
}

impl HyperbolicLength {
    pub const ZERO: Self = Self {
        value: 0.0,
        saturated: false,
    };

    pub fn new(value: f64) -> Self {
        Self {
            value,
            saturated: false,
        }
    }
}

/// `artanh(t)` for `t ∈ [0, 1]`, capped at `artanh(SATURATION_THRESHOLD)`.
pub fn artanh_guarded(t: f64) -> HyperbolicLength {
    let t = t.max(0.0);
    if t >= SATURATION_THRESHOLD {
        let cap = SATURATION_THRESHOLD;
        return HyperbolicLength {
            value: 0.5 * ((1.0 + cap) / (1.0 - cap)).ln(),
            saturated: true,
        };
    }
    // ln_1p keeps full relative accuracy for small t
    HyperbolicLength::new(0.5 * (2.0 * t / (1.0 - t)).ln_1p())
}

/// Möbius quotient `|a - b| / |1 - āb|` for points of the unit disk.
pub fn pseudo_hyperbolic(a: Complex64, b: Complex64) -> f64 {
    let num = (a - b).norm();
    if num == 0.0 {
        return 0.0;
    }
    let den = (Complex64::new(1.0, 0.0) - a.conj() * b).norm();
    (num / den).min(1.0)
}

pub fn poincare_distance(a: DiskPoint, b: DiskPoint) -> HyperbolicLength {
    artanh_guarded(pseudo_hyperbolic(a.0, b.0))
}

/// Unchecked variant used where both arguments are known to lie in the disk.
pub(crate) fn rho(a: Complex64, b: Complex64) -> f64 {
    artanh_guarded(pseudo_hyperbolic(a, b)).value
}

/// Infinitesimal Poincaré length of the tangent vector `x` at `z`.
pub fn poincare_metric_density(z: DiskPoint, x: Complex64) -> f64 {
    x.norm() / (1.0 - z.0.norm_sqr())
}

/// Poincaré distance of the disk of radius `radius` centred at 0.
pub fn scaled_disk_distance(radius: f64, a: Complex64, b: Complex64) -> Result<HyperbolicLength> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "disk radius {radius} must lie in (0, 1]"
        )));
    }
    let a = DiskPoint::new(a / radius)?;
    let b = DiskPoint::new(b / radius)?;
    Ok(poincare_distance(a, b))
}

/// The automorphism `z ↦ (z - c) / (1 - c̄ z)` sending `c` to the origin.
pub fn mobius_automorphism(center: DiskPoint, z: DiskPoint) -> DiskPoint {
    let c = center.0;
    let w = (z.0 - c) / (Complex64::new(1.0, 0.0) - c.conj() * z.0);
    // |w| < 1 holds analytically; clamp rounding at the boundary
    let norm = w.norm();
    if norm >= 1.0 {
        DiskPoint(w * (SATURATION_THRESHOLD / norm))
    } else {
        DiskPoint(w)
    }
}

/// Inverse automorphism `u ↦ (u + c) / (1 + c̄ u)`.
pub(crate) fn mobius_inverse(center: Complex64, u: Complex64) -> Complex64 {
    (u + center) / (Complex64::new(1.0, 0.0) + center.conj() * u)
}
