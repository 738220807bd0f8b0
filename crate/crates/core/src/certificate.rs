use serde::{Deserialize, Serialize};

use crate::caratheodory::HolMapToDisk;
use crate::hyperbolic::HyperbolicLength;
use crate::kobayashi::DiskChain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

/// The object whose validity implies the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    /// A holomorphic map into the unit disk (lower bounds on c).
    Map(HolMapToDisk),
    /// A chain of analytic disks (upper bounds on k^(m) and l).
    Chain(DiskChain),
    /// A polyline in the real slice `(t1, t2)` (upper bounds on metric distances).
    MetricPath(Vec<[f64; 2]>),
    /// Coincident points: the bound is zero.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub value: HyperbolicLength,
    pub direction: Direction,
    pub witness: Witness,
    /// Numeric safety slack already accounted for in `value`.
    pub margin: f64,
}

impl BoundCertificate {
    pub fn lower(value: f64, witness: Witness, margin: f64) -> Self {
        Self {
            value: HyperbolicLength::new(value),
            direction: Direction::Lower,
            witness,
            margin,
        }
    }

    pub fn upper(value: f64, witness: Witness, margin: f64) -> Self {
        Self {
            value: HyperbolicLength::new(value),
            direction: Direction::Upper,
            witness,
            margin,
        }
    }

    pub fn value(&self) -> f64 {
        self.value.value
    }

    /// Short human-readable witness label for tables.
    pub fn witness_name(&self) -> String {
        match &self.witness {
            Witness::Map(m) => m.name(),
            Witness::Chain(c) => format!("chain({})", c.legs.len()),
            Witness::MetricPath(p) => format!("path({})", p.len()),
            Witness::Trivial => "trivial".into(),
        }
    }
}
