//! Upper estimates of the metric distance by shortest paths on the solved grid.
//!
//! For a Reinhardt potential the length element in polar coordinates is
//! `a^T M a + b^T M b` with `a = dt`, `b_k = t_k dφ_k` and `M` the reduced real-slice
//! metric, so paths are searched in the real slice and phase changes are paid for at
//! the endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use super::solver::MetricGrid;
use crate::certificate::{BoundCertificate, Witness};
use crate::domain::DomainPoint;
use crate::error::{LabError, Result};

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn quad_form(m: &[f64; 3], a: [f64; 2]) -> f64 {
    m[0] * a[0] * a[0] + 2.0 * m[1] * a[0] * a[1] + m[2] * a[1] * a[1]
}

/// Length of a straight segment by the composite midpoint rule with `pieces` panels.
fn segment_length(grid: &MetricGrid, p: [f64; 2], q: [f64; 2], pieces: usize) -> Option<f64> {
    let d = [(q[0] - p[0]) / pieces as f64, (q[1] - p[1]) / pieces as f64];
    let mut total = 0.0;
    for k in 0..pieces {
        let s = (k as f64 + 0.5) / pieces as f64;
        let m = grid.metric_at(p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1]))?;
        total += quad_form(&m, d).max(0.0).sqrt();
    }
    Some(total)
}

fn polyline_length(grid: &MetricGrid, path: &[[f64; 2]], pieces: usize) -> Option<f64> {
    path.windows(2).map(|w| segment_length(grid, w[0], w[1], pieces)).sum()
}

struct Graph {
    positions: Vec<[f64; 2]>,
    edges: Vec<Vec<(usize, f64)>>,
}

fn dijkstra(g: &Graph, start: usize, goal: usize) -> Option<(f64, Vec<usize>)> {
    let mut dist = vec![f64::INFINITY; g.positions.len()];
    let mut prev = vec![usize::MAX; g.positions.len()];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(State { cost: 0.0, node: start });
    while let Some(State { cost, node }) = heap.pop() {
        if node == goal {
            break;
        }
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &g.edges[node] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = node;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    if !dist[goal].is_finite() {
        return None;
    }
    let mut path = vec![goal];
    while *path.last().unwrap() != start {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some((dist[goal], path))
}

/// 8-neighbour graph over active nodes plus the two endpoints.
fn build_graph(grid: &MetricGrid, s: [f64; 2], e: [f64; 2]) -> (Graph, usize, usize) {
    let size = grid.size;
    let mut positions: Vec<[f64; 2]> = Vec::new();
    let mut id = vec![usize::MAX; size * size];
    for i in 0..size {
        for j in 0..size {
            if grid.active[grid.index(i, j)] {
                id[grid.index(i, j)] = positions.len();
                positions.push([grid.t(i), grid.t(j)]);
            }
        }
    }
    let mut edges = vec![Vec::new(); positions.len() + 2];
    for i in 0..size {
        for j in 0..size {
            let a = id[grid.index(i, j)];
            if a == usize::MAX {
                continue;
            }
            for (di, dj) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni as usize >= size || nj as usize >= size {
                    continue;
                }
                let b = id[grid.index(ni as usize, nj as usize)];
                if b == usize::MAX {
                    continue;
                }
                if let Some(w) = segment_length(grid, positions[a], positions[b], 1) {
                    edges[a].push((b, w));
                    edges[b].push((a, w));
                }
            }
        }
    }
    let (si, ei) = (positions.len(), positions.len() + 1);
    positions.push(s);
    positions.push(e);
    let reach = 1.5 * grid.h;
    for (virt, p) in [(si, s), (ei, e)] {
        for k in 0..si {
            let q = positions[k];
            if (q[0] - p[0]).hypot(q[1] - p[1]) <= reach {
                if let Some(w) = segment_length(grid, p, q, 2) {
                    edges[virt].push((k, w));
                    edges[k].push((virt, w));
                }
            }
        }
    }
    if s == e {
        edges[si].push((ei, 0.0));
    }
    (Graph { positions, edges }, si, ei)
}

/// Moves interior vertices toward their neighbours' midpoint whenever that shortens the path.
fn smooth(grid: &MetricGrid, path: &mut [[f64; 2]]) {
    for _ in 0..100 {
        let mut moved = false;
        for k in 1..path.len().saturating_sub(1) {
            let local = |p: [f64; 2]| -> Option<f64> {
                Some(segment_length(grid, path[k - 1], p, 2)? + segment_length(grid, p, path[k + 1], 2)?)
            };
            let Some(now) = local(path[k]) else { continue };
            let mid = [0.5 * (path[k - 1][0] + path[k + 1][0]), 0.5 * (path[k - 1][1] + path[k + 1][1])];
            for frac in [1.0, 0.5, 0.25] {
                let cand = [
                    path[k][0] + frac * (mid[0] - path[k][0]),
                    path[k][1] + frac * (mid[1] - path[k][1]),
                ];
                if let Some(l) = local(cand) {
                    if l < now - 1e-15 {
                        path[k] = cand;
                        moved = true;
                        break;
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// Shortest path between two moduli pairs in the real slice.
/// Returns `(length, quadrature margin, polyline)`.
pub fn real_slice_distance(grid: &MetricGrid, s: [f64; 2], e: [f64; 2]) -> Result<(f64, f64, Vec<[f64; 2]>)> {
    for p in [s, e] {
        if grid.metric_at(p[0], p[1]).is_none() {
            return Err(LabError::OutsideDomain(format!(
                "moduli ({}, {}) are off the solved grid",
                p[0], p[1]
            )));
        }
    }
    if s == e {
        return Ok((0.0, 0.0, vec![s, e]));
    }
    let (graph, si, ei) = build_graph(grid, s, e);
    let (_, nodes) = dijkstra(&graph, si, ei)
        .ok_or_else(|| LabError::OutsideDomain("endpoints are not connected on the grid".into()))?;
    let mut path: Vec<[f64; 2]> = nodes.iter().map(|&k| graph.positions[k]).collect();
    smooth(grid, &mut path);
    let fine = polyline_length(grid, &path, 8).expect("smoothing keeps the path on the grid");
    let coarse = polyline_length(grid, &path, 4).expect("smoothing keeps the path on the grid");
    Ok((fine, (fine - coarse).abs(), path))
}

fn wrap(phi: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = phi.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Upper estimate of `d^KE(x, y)` with the quadrature error as margin.
pub fn ke_distance_estimate(grid: &MetricGrid, x: &DomainPoint, y: &DomainPoint) -> Result<BoundCertificate> {
    grid.spec.require_interior(x)?;
    grid.spec.require_interior(y)?;
    if x == y {
        return Ok(BoundCertificate::upper(0.0, Witness::Trivial, 0.0));
    }
    let s = [x.coords[0].norm(), x.coords[1].norm()];
    let e = [y.coords[0].norm(), y.coords[1].norm()];
    let (len, margin, path) = real_slice_distance(grid, s, e)?;
    // rotate the phases at the endpoint moduli; unnecessary when either modulus vanishes
    let dphi: Vec<f64> = (0..2)
        .map(|k| {
            if x.coords[k].norm() == 0.0 || y.coords[k].norm() == 0.0 {
                0.0
            } else {
                wrap((y.coords[k] * x.coords[k].conj()).arg())
            }
        })
        .collect();
    let mut total = len;
    if dphi.iter().any(|d| *d != 0.0) {
        let m = grid
            .metric_at(e[0], e[1])
            .ok_or_else(|| LabError::OutsideDomain("endpoint off grid".into()))?;
        total += quad_form(&m, [e[0] * dphi[0], e[1] * dphi[1]]).sqrt();
    }
    Ok(BoundCertificate::upper(total, Witness::MetricPath(path), margin))
}

/// Raw graph distances between two nodes: restricted to the real slice, and over a
/// `(t1, t2, θ)` graph where `θ ∈ [-Θ, Θ]` rotates the second coordinate.
pub fn slice_versus_phase_search(
    grid: &MetricGrid,
    start: (usize, usize),
    end: (usize, usize),
    phase_steps: usize,
    max_phase: f64,
) -> Result<(f64, f64)> {
    let size = grid.size;
    let layers = 2 * phase_steps + 1;
    let dtheta = if phase_steps == 0 { 0.0 } else { max_phase / phase_steps as f64 };
    let node = |i: usize, j: usize, k: usize| (k * size + i) * size + j;
    let total = layers * size * size;
    let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    for k in 0..layers {
        for i in 0..size {
            for j in 0..size {
                if !grid.active[grid.index(i, j)] {
                    continue;
                }
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        for dk in -1i64..=1 {
                            let (ni, nj, nk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                            if (di, dj, dk) == (0, 0, 0)
                                || ni < 0
                                || nj < 0
                                || nk < 0
                                || ni as usize >= size
                                || nj as usize >= size
                                || nk as usize >= layers
                            {
                                continue;
                            }
                            let (ni, nj, nk) = (ni as usize, nj as usize, nk as usize);
                            if !grid.active[grid.index(ni, nj)] {
                                continue;
                            }
                            let p = [grid.t(i), grid.t(j)];
                            let q = [grid.t(ni), grid.t(nj)];
                            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                            let Some(m) = grid.metric_at(mid[0], mid[1]) else { continue };
                            let a = [q[0] - p[0], q[1] - p[1]];
                            let b = [0.0, mid[1] * dk as f64 * dtheta];
                            let w = (quad_form(&m, a) + quad_form(&m, b)).sqrt();
                            edges[node(i, j, k)].push((node(ni, nj, nk), w));
                        }
                    }
                }
            }
        }
    }
    let positions = vec![[0.0, 0.0]; total];
    let g = Graph { positions, edges };
    let mid_layer = phase_steps;
    let full = dijkstra(&g, node(start.0, start.1, mid_layer), node(end.0, end.1, mid_layer))
        .map(|(c, _)| c)
        .ok_or_else(|| LabError::OutsideDomain("nodes are not connected".into()))?;
    let restricted_edges: Vec<Vec<(usize, f64)>> = g
        .edges
        .iter()
        .enumerate()
        .map(|(a, es)| {
            let ka = a / (size * size);
            if ka != mid_layer {
                Vec::new()
            } else {
                es.iter().filter(|(b, _)| b / (size * size) == mid_layer).cloned().collect()
            }
        })
        .collect();
    let rg = Graph {
        positions: g.positions,
        edges: restricted_edges,
    };
    let slice = dijkstra(&rg, node(start.0, start.1, mid_layer), node(end.0, end.1, mid_layer))
        .map(|(c, _)| c)
        .ok_or_else(|| LabError::OutsideDomain("nodes are not connected".into()))?;
    Ok((slice, full))
}

/// `ω(z)(X, X̄)` for a complex tangent vector, with the Reinhardt phase factors on `g12`.
pub fn metric_value(grid: &MetricGrid, z: &DomainPoint, x: &[Complex64]) -> Result<f64> {
    let t = [z.coords[0].norm(), z.coords[1].norm()];
    let m = grid
        .metric_at(t[0], t[1])
        .ok_or_else(|| LabError::OutsideDomain(format!("moduli {t:?} are off the solved grid")))?;
    let phase = if t[0] > 0.0 && t[1] > 0.0 {
        z.coords[0].conj() * z.coords[1] / (t[0] * t[1])
    } else {
        Complex64::new(0.0, 0.0)
    };
    let g12 = m[1] * phase;
    let v = m[0] * x[0].norm_sqr() + m[2] * x[1].norm_sqr() + 2.0 * (g12 * x[0] * x[1].conj()).re;
    Ok(v)
}
