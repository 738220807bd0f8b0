//! Run configuration, read from JSON.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::caratheodory::FamilyConfig;
use crate::domain::{DomainPoint, DomainSpec};
use crate::error::{LabError, Result};
use crate::kahler_einstein::GridConfig;
use crate::kobayashi::OptConfig;

/// One coordinate: a real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Real(f64),
    Complex([f64; 2]),
}

impl Coord {
    pub fn value(&self) -> Complex64 {
        match *self {
            Coord::Real(x) => Complex64::new(x, 0.0),
            Coord::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub fn to_point(coords: &[Coord]) -> DomainPoint {
    DomainPoint::new(coords.iter().map(Coord::value).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub x: Vec<Coord>,
    pub y: Vec<Coord>,
}

impl PointPair {
    pub fn points(&self) -> (DomainPoint, DomainPoint) {
        (to_point(&self.x), to_point(&self.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Thresholds,
    Bounds,
    Sweep,
    GapScan,
    Ke,
    All,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Thresholds => "thresholds",
            Self::Bounds => "bounds",
            Self::Sweep => "sweep",
            Self::GapScan => "gap-scan",
            Self::Ke => "ke",
            Self::All => "all",
        }
    }
}

/// Parameter grid for the window tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdGrid {
    pub a_n: Vec<usize>,
    pub a_r: Vec<f64>,
    pub a_epsilon: Vec<f64>,
    pub b_n: Vec<usize>,
    pub b_r: Vec<f64>,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self {
            a_n: vec![2, 3, 4],
            a_r: vec![0.2, 0.4, 0.6, 0.8],
            a_epsilon: vec![1e-4, 1e-3, 1e-2, 0.05, 0.1],
            b_n: vec![3, 4],
            b_r: vec![0.05, 0.1, 0.2, 0.3, 0.5],
        }
    }
}

/// Axis pair `x = (x,…,x,0)`, `y = (0,y,…,y)` and the ε values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub x: f64,
    pub y: f64,
    pub epsilons: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            x: 0.4,
            y: 0.4,
            epsilons: vec![0.1, 0.05, 0.01, 0.002],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapScanSettings {
    /// Exhaustion level `l` of `S_l`.
    pub level: u32,
    /// Base point `p`; the origin when absent.
    pub base: Option<Vec<Coord>>,
    /// Number of scan points strictly between `p` and the boundary of `S_l`.
    pub steps: usize,
    /// Multiplier on Lempert starts for the recheck; 0 skips it.
    pub recheck_factor: usize,
}

impl Default for GapScanSettings {
    fn default() -> Self {
        Self {
            level: 5,
            base: None,
            steps: 12,
            recheck_factor: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// Informational; the command line selects what runs.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub points: Vec<PointPair>,
    #[serde(default)]
    pub family_config: FamilyConfig,
    #[serde(default)]
    pub opt_config: OptConfig,
    #[serde(default)]
    pub grid_config: GridConfig,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub thresholds: ThresholdGrid,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub gap_scan: GapScanSettings,
}

fn default_delta() -> f64 {
    0.5
}

/// Malformed or inconsistent configuration.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks what deserialization cannot: parameter ranges and point membership.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        for (k, pair) in self.points.iter().enumerate() {
            let (x, y) = pair.points();
            for p in [&x, &y] {
                self.domain.require_interior(p).map_err(|e| {
                    LabError::InvalidParameter(format!("points[{k}]: {e}"))
                })?;
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "delta = {} must be positive",
                self.delta
            )));
        }
        if self.opt_config.starts == 0 {
            return Err(LabError::InvalidParameter("opt_config.starts must be >= 1".into()));
        }
        if self.grid_config.resolution < 8 {
            return Err(LabError::InvalidParameter(
                "grid_config.resolution must be >= 8".into(),
            ));
        }
        if self.gap_scan.level == 0 || self.gap_scan.steps == 0 {
            return Err(LabError::InvalidParameter(
                "gap_scan.level and gap_scan.steps must be >= 1".into(),
            ));
        }
        if let Some(b) = &self.gap_scan.base {
            if b.len() != self.domain.n {
                return Err(LabError::DimensionMismatch {
                    expected: self.domain.n,
                    got: b.len(),
                });
            }
        }
        Ok(())
    }

    /// Replaces the seeds of all randomized components.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.opt_config.seed = seed;
        self.family_config.seed = seed;
        self
    }
}
