//! Bounds along a decreasing sequence of ε for the axis pair `(x,…,x,0)`, `(0,y,…,y)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chain::{nested_chains, ChainSearch, WaypointStrategy};
use super::lempert::{search_leg, OptConfig, Target, WarmStart};
use crate::caratheodory::{chi_lower_bound, projection_lower_bound};
use crate::domain::{DomainPoint, DomainSpec};
use crate::error::{LabError, Result};

/// Tolerance for the constancy flag of the two-chain column.
pub const K2_CONSTANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub c_lb: f64,
    /// `+∞` when no valid disk was found at this or any smaller ε.
    pub l_ub: f64,
    pub k2_ub: f64,
    pub k3_ub: f64,
    pub k2_const_flag: bool,
    pub l_monotone_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Rows in the order of the input list.
    pub rows: Vec<SweepRow>,
    pub k2_constant: bool,
    pub l_monotone: bool,
    /// `max_{m ∈ {3, 4}} |UB_m - UB_2|` over the rows.
    pub plateau: f64,
}

/// Validates `x = (a,…,a,0)`, `y = (0,b,…,b)` with `a, b ∈ r𝔻 ∖ {0}`; returns `(a, b)`.
pub(crate) fn check_axis_pair(spec: &DomainSpec, x: &DomainPoint, y: &DomainPoint) -> Result<(Complex64, Complex64)> {
    spec.check_dim(x)?;
    spec.check_dim(y)?;
    let n = spec.n;
    let (a, b) = (x.coords[0], y.coords[n - 1]);
    let shape = x.coords[..n - 1].iter().all(|c| *c == a)
        && x.coords[n - 1].norm() == 0.0
        && y.coords[1..].iter().all(|c| *c == b)
        && y.coords[0].norm() == 0.0;
    if !shape {
        return Err(LabError::Precondition(
            "expected x = (x,...,x,0) and y = (0,y,...,y)".into(),
        ));
    }
    for (name, v) in [("x", a), ("y", b)] {
        if v.norm() == 0.0 || v.norm() >= spec.r {
            return Err(LabError::Precondition(format!(
                "{name} must lie in r*D minus the origin, got |{name}| = {}",
                v.norm()
            )));
        }
    }
    Ok((a, b))
}

/// Runs the sweep; each row is certified independently, then nesting across ε is applied
/// (a disk valid for a smaller ε is valid for every larger one).
pub fn epsilon_sweep(
    template: &DomainSpec,
    x: &DomainPoint,
    y: &DomainPoint,
    eps_list: &[f64],
    cfg: &OptConfig,
) -> Result<SweepTable> {
    if eps_list.is_empty() {
        return Err(LabError::InvalidParameter("empty epsilon list".into()));
    }
    let specs = eps_list
        .iter()
        .map(|&e| template.with_epsilon(e))
        .collect::<Result<Vec<_>>>()?;
    for s in &specs {
        check_axis_pair(s, x, y)?;
    }
    let mut order: Vec<usize> = (0..eps_list.len()).collect();
    order.sort_by(|&i, &j| eps_list[j].total_cmp(&eps_list[i]));

    let n = template.n;
    let mut own = vec![(0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY); eps_list.len()];
    let mut warm: Vec<WarmStart> = Vec::new();
    let mut plateau = 0.0f64;
    for &i in &order {
        let spec = &specs[i];
        let mut c_lb = chi_lower_bound(spec, x, y)?.value();
        for k in 0..n {
            c_lb = c_lb.max(projection_lower_bound(spec, x, y, k)?.value());
        }
        let target = Target::Domain(spec);
        let res = search_leg(target, x, y, cfg, &warm);
        if let Some(w) = res.warm.clone() {
            warm = vec![w];
        }
        let search = ChainSearch::new(target, cfg);
        search.insert(x, y, res.leg.clone());
        let chains = nested_chains(&search, x, y, 4, &WaypointStrategy::Axis, cfg);
        let cost = |k: usize| chains[k].as_ref().map_or(f64::INFINITY, |c| c.total_cost());
        if cost(1).is_finite() {
            plateau = plateau.max((cost(2) - cost(1)).abs()).max((cost(3) - cost(1)).abs());
        }
        own[i] = (c_lb, cost(0), cost(1), cost(2));
    }

    let mut rows: Vec<SweepRow> = eps_list
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let nested = |f: fn(&(f64, f64, f64, f64)) -> f64| {
                (0..eps_list.len())
                    .filter(|&j| eps_list[j] <= epsilon)
                    .map(|j| f(&own[j]))
                    .fold(f64::INFINITY, f64::min)
            };
            let l_ub = nested(|r| r.1);
            let k2_ub = nested(|r| r.2).min(l_ub);
            let k3_ub = nested(|r| r.3).min(k2_ub);
            SweepRow {
                epsilon,
                c_lb: own[i].0,
                l_ub,
                k2_ub,
                k3_ub,
                k2_const_flag: false,
                l_monotone_flag: false,
            }
        })
        .collect();
    let k2_first = rows[order[0]].k2_ub;
    let k2_constant = rows.iter().all(|r| (r.k2_ub - k2_first).abs() <= K2_CONSTANT_TOL);
    let l_monotone = order.windows(2).all(|w| rows[w[1]].l_ub >= rows[w[0]].l_ub);
    for r in &mut rows {
        r.k2_const_flag = k2_constant;
        r.l_monotone_flag = l_monotone;
    }
    Ok(SweepTable {
        rows,
        k2_constant,
        l_monotone,
        plateau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_endpoint() {
        let spec = DomainSpec::new(2, 0.8, 0.8, 0.1).unwrap();
        let x = DomainPoint::from_real(&[0.0, 0.0]);
        let y = DomainPoint::from_real(&[0.0, 0.4]);
        assert!(epsilon_sweep(&spec, &x, &y, &[0.1], &OptConfig::default()).is_err());
    }

    #[test]
    fn rejects_wrong_shape() {
        let spec = DomainSpec::new(2, 0.8, 0.8, 0.1).unwrap();
        let x = DomainPoint::from_real(&[0.4, 0.1]);
        let y = DomainPoint::from_real(&[0.0, 0.4]);
        assert!(check_axis_pair(&spec, &x, &y).is_err());
    }
}
