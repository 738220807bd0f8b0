//! Chains of analytic disks: upper bounds on `k^(m)` and the two-leg reduction.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::disk::{AnalyticDisk, LegDisk, SliceDisk};
use super::lempert::{closed_form_cost, search_leg, ChainLeg, OptConfig, StructuredMode, Target};
use crate::certificate::{BoundCertificate, Witness};
use crate::domain::{DomainPoint, DomainSpec};
use crate::error::{LabError, Result};

/// Waypoints `p_0 = x, …, p_m = y` and one certified leg per consecutive pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskChain {
    pub waypoints: Vec<DomainPoint>,
    pub legs: Vec<ChainLeg>,
}

impl DiskChain {
    pub fn total_cost(&self) -> f64 {
        self.legs.iter().map(|l| l.cost).sum()
    }

    /// Largest mismatch between leg endpoints and waypoints.
    pub fn endpoint_error(&self) -> f64 {
        self.legs
            .iter()
            .enumerate()
            .map(|(i, leg)| {
                let start = leg.disk.evaluate(Complex64::new(leg.a, 0.0));
                let end = leg.disk.evaluate(Complex64::new(leg.b, 0.0));
                start
                    .distance_to(&self.waypoints[i])
                    .max(end.distance_to(&self.waypoints[i + 1]))
            })
            .fold(0.0, f64::max)
    }

    /// Repeats the final waypoint with constant legs until there are `m` legs.
    pub fn padded(mut self, m: usize) -> Self {
        while self.legs.len() < m {
            let last = self.waypoints.last().cloned().expect("chain has endpoints");
            self.legs.push(ChainLeg::constant(&last));
            self.waypoints.push(last);
        }
        self
    }

    fn certificate(self, margin: f64) -> BoundCertificate {
        BoundCertificate::upper(self.total_cost(), Witness::Chain(self), margin)
    }
}

/// How interior waypoints are initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaypointStrategy {
    /// Routes through points with a vanishing coordinate (origin and axis projections).
    #[default]
    Axis,
    /// A fixed list of interior waypoints.
    Fixed(Vec<DomainPoint>),
}

fn point_key(p: &DomainPoint) -> Vec<u64> {
    p.coords.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()
}

/// Leg search with memoization across routes.
pub(crate) struct ChainSearch<'a> {
    target: Target<'a>,
    cfg: OptConfig,
    cache: Mutex<HashMap<(Vec<u64>, Vec<u64>), Option<ChainLeg>>>,
}

impl<'a> ChainSearch<'a> {
    pub fn new(target: Target<'a>, cfg: &OptConfig) -> Self {
        Self {
            target,
            cfg: cfg.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn insert(&self, p: &DomainPoint, q: &DomainPoint, leg: Option<ChainLeg>) {
        self.cache.lock().unwrap().insert((point_key(p), point_key(q)), leg);
    }

    pub fn leg(&self, p: &DomainPoint, q: &DomainPoint) -> Option<ChainLeg> {
        let key = (point_key(p), point_key(q));
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let leg = search_leg(self.target, p, q, &self.cfg, &[]).leg;
        self.cache.lock().unwrap().insert(key, leg.clone());
        leg
    }

    pub fn route(&self, points: &[DomainPoint]) -> Option<DiskChain> {
        for p in points {
            if !self.target.contains(p).unwrap_or(false) {
                return None;
            }
        }
        let legs = points
            .windows(2)
            .map(|w| self.leg(&w[0], &w[1]))
            .collect::<Option<Vec<_>>>()?;
        Some(DiskChain {
            waypoints: points.to_vec(),
            legs,
        })
    }
}

/// `p` with its smallest-modulus coordinate set to zero (unchanged if one already vanishes).
fn axis_projection(p: &DomainPoint) -> DomainPoint {
    let mut q = p.clone();
    let k = (0..p.dim())
        .min_by(|&a, &b| p.coords[a].norm().total_cmp(&p.coords[b].norm()))
        .unwrap_or(0);
    q.coords[k] = Complex64::new(0.0, 0.0);
    q
}

fn dedup(points: Vec<DomainPoint>) -> Vec<DomainPoint> {
    let mut out: Vec<DomainPoint> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    out
}

fn routes(x: &DomainPoint, y: &DomainPoint, strategy: &WaypointStrategy) -> Vec<Vec<DomainPoint>> {
    let n = x.dim();
    let interior: Vec<Vec<DomainPoint>> = match strategy {
        WaypointStrategy::Axis => {
            let (xp, yp) = (axis_projection(x), axis_projection(y));
            let origin = DomainPoint::origin(n);
            vec![
                vec![origin.clone()],
                vec![xp.clone(), yp.clone()],
                vec![xp, origin, yp],
            ]
        }
        WaypointStrategy::Fixed(w) => vec![w.clone()],
    };
    let mut out: Vec<Vec<DomainPoint>> = Vec::new();
    for mid in interior {
        let mut pts = vec![x.clone()];
        pts.extend(mid);
        pts.push(y.clone());
        let pts = dedup(pts);
        if !out.contains(&pts) {
            out.push(pts);
        }
    }
    out
}

fn cheaper(a: Option<DiskChain>, b: Option<DiskChain>) -> Option<DiskChain> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.total_cost() < a.total_cost() { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Coordinate descent on interior waypoints, keeping vanishing coordinates at zero.
fn refine(search: &ChainSearch, light: &ChainSearch, chain: DiskChain, sweeps: usize, radius: f64) -> Option<DiskChain> {
    let mut points = chain.waypoints.clone();
    let mut cost = light.route(&points).map_or(f64::INFINITY, |c| c.total_cost());
    let dirs = [
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ];
    for sweep in 0..sweeps {
        let step = radius * 0.05 / (1 << sweep) as f64;
        for i in 1..points.len().saturating_sub(1) {
            for j in 0..points[i].dim() {
                if points[i].coords[j].norm() == 0.0 {
                    continue;
                }
                for d in dirs {
                    let mut trial = points.clone();
                    trial[i].coords[j] += d * step;
                    if let Some(c) = light.route(&trial) {
                        if c.total_cost() < cost {
                            cost = c.total_cost();
                            points = trial;
                        }
                    }
                }
            }
        }
    }
    if points == chain.waypoints {
        return Some(chain);
    }
    cheaper(Some(chain), search.route(&points))
}

/// Best chain with at most `k` legs for each `k = 1..=m`, nested so the costs never increase.
pub(crate) fn nested_chains(
    search: &ChainSearch,
    x: &DomainPoint,
    y: &DomainPoint,
    m: usize,
    strategy: &WaypointStrategy,
    cfg: &OptConfig,
) -> Vec<Option<DiskChain>> {
    let light_cfg = OptConfig {
        starts: cfg.starts.min(2),
        structured: StructuredMode::Off,
        ..cfg.clone()
    };
    let light = ChainSearch::new(search.target, &light_cfg);
    let all = routes(x, y, strategy);
    let mut out: Vec<Option<DiskChain>> = Vec::with_capacity(m);
    let mut best = search.route(&[x.clone(), y.clone()]);
    out.push(best.clone());
    for k in 2..=m {
        for pts in all.iter().filter(|p| p.len() == k + 1) {
            let mut cand = search.route(pts);
            if cfg.refine_waypoints && pts.len() > 2 {
                if let Some(c) = cand.take() {
                    cand = refine(search, &light, c, cfg.refine_sweeps, search.target.spec().big_r);
                }
            }
            best = cheaper(best.map(|c| c.padded(k)), cand);
        }
        best = best.map(|c| c.padded(k));
        out.push(best.clone());
    }
    out
}

fn require_pair(spec: &DomainSpec, x: &DomainPoint, y: &DomainPoint) -> Result<()> {
    spec.require_interior(x)?;
    spec.require_interior(y)
}

/// Upper certificate for `k^(m)(x, y)` from the cheapest chain with at most `m` legs.
pub fn chain_upper_bound(
    spec: &DomainSpec,
    m: usize,
    x: &DomainPoint,
    y: &DomainPoint,
    strategy: &WaypointStrategy,
    cfg: &OptConfig,
) -> Result<BoundCertificate> {
    if m == 0 {
        return Err(LabError::InvalidParameter("chain length must be >= 1".into()));
    }
    require_pair(spec, x, y)?;
    if let WaypointStrategy::Fixed(w) = strategy {
        if w.len() + 1 > m {
            return Err(LabError::InvalidParameter(format!(
                "{} interior waypoints need at least {} legs",
                w.len(),
                w.len() + 1
            )));
        }
    }
    chain_ladder(spec, m, x, y, strategy, cfg)?
        .pop()
        .flatten()
        .ok_or_else(|| LabError::NoValidDisk(format!("no certified chain with {m} legs")))
}

/// Certificates for `l = k^(1), k^(2), …, k^(m)` from one shared leg search, nested so
/// each entry is at most the previous one. `None` where no certified chain was found.
pub fn chain_ladder(
    spec: &DomainSpec,
    m: usize,
    x: &DomainPoint,
    y: &DomainPoint,
    strategy: &WaypointStrategy,
    cfg: &OptConfig,
) -> Result<Vec<Option<BoundCertificate>>> {
    if m == 0 {
        return Err(LabError::InvalidParameter("chain length must be >= 1".into()));
    }
    require_pair(spec, x, y)?;
    if x == y {
        return Ok(vec![Some(BoundCertificate::upper(0.0, Witness::Trivial, 0.0)); m]);
    }
    let search = ChainSearch::new(Target::Domain(spec), cfg);
    Ok(nested_chains(&search, x, y, m, strategy, cfg)
        .into_iter()
        .enumerate()
        .map(|(k, c)| c.map(|c| c.padded(k + 1).certificate(cfg.tolerance)))
        .collect())
}

/// The explicit two-leg chain `x → 0 → y` for `x = (x,…,x,0)`, `y = (0,y,…,y)` through
/// the disks `λ ↦ (rλ,…,rλ,0)` and `λ ↦ (0,rλ,…,rλ)`, rotated to hit complex endpoints.
pub fn axis_two_chain(spec: &DomainSpec, x: &DomainPoint, y: &DomainPoint) -> Result<BoundCertificate> {
    let (a, b) = super::sweep::check_axis_pair(spec, x, y)?;
    let n = spec.n;
    let r = spec.r;
    let zero = Complex64::new(0.0, 0.0);
    let leg = |value: Complex64, active: &dyn Fn(usize) -> bool| -> AnalyticDisk {
        let unit = value / value.norm();
        AnalyticDisk {
            coefficients: (0..n)
                .map(|k| if active(k) { vec![zero, r * unit] } else { vec![zero] })
                .collect(),
            validity_margin: 0.0,
        }
    };
    let first = leg(a, &|k| k + 1 < n);
    let second = leg(b, &|k| k > 0);
    let (ta, tb) = (a.norm() / r, b.norm() / r);
    let chain = DiskChain {
        waypoints: vec![x.clone(), DomainPoint::origin(n), y.clone()],
        legs: vec![
            ChainLeg {
                disk: LegDisk::Polynomial(first),
                a: ta,
                b: 0.0,
                cost: closed_form_cost(ta),
                slack: 1.0 - r / spec.big_r,
            },
            ChainLeg {
                disk: LegDisk::Polynomial(second),
                a: 0.0,
                b: tb,
                cost: closed_form_cost(tb),
                slack: 1.0 - r / spec.big_r,
            },
        ],
    };
    Ok(chain.certificate(0.0))
}

/// Replaces legs `l-1` and `l` (1-based) by a single disk inside their common axis slice.
pub fn chain_reduce(spec: &DomainSpec, chain: &DiskChain, l: usize) -> Result<DiskChain> {
    const TOL: f64 = 1e-10;
    let m = chain.legs.len();
    if l < 2 || l > m || chain.waypoints.len() != m + 1 {
        return Err(LabError::InvalidParameter(format!(
            "reduction index {l} out of range for a chain with {m} legs"
        )));
    }
    let (i, j) = (l - 2, l - 1);
    let (p, q, r) = (&chain.waypoints[i], &chain.waypoints[j], &chain.waypoints[l]);
    let mut out = chain.clone();
    // a repeated waypoint only carries a zero-cost leg
    if q.distance_to(r) == 0.0 && chain.legs[j].cost == 0.0 {
        out.legs.remove(j);
        out.waypoints.remove(l);
        return Ok(out);
    }
    if p.distance_to(q) == 0.0 && chain.legs[i].cost == 0.0 {
        out.legs.remove(i);
        out.waypoints.remove(j);
        return Ok(out);
    }
    let slice = (0..spec.n).find(|&k| {
        [p, q, r].iter().all(|w| w.coords[k].norm() <= TOL)
            && chain.legs[i].disk.vanishes_in(k, TOL)
            && chain.legs[j].disk.vanishes_in(k, TOL)
    });
    if slice.is_none() {
        return Err(LabError::Precondition(format!(
            "legs {} and {l} do not share an axis slice",
            l - 1
        )));
    }
    let (disk, b) = SliceDisk::through(spec.big_r, p, r);
    if !disk.is_valid(spec) || b >= 1.0 {
        return Err(LabError::Precondition("merged slice disk leaves the domain".into()));
    }
    let leg = ChainLeg {
        disk: LegDisk::Slice(disk),
        a: 0.0,
        b,
        cost: closed_form_cost(b),
        slack: 0.0,
    };
    out.legs.splice(i..=j, [leg]);
    out.waypoints.remove(j);
    Ok(out)
}
