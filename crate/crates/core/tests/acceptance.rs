//! Release gate: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances and time budgets are fixed constants below.

use std::path::Path;
use std::time::{Duration, Instant};

use intrinsic_lab::caratheodory::{best_lower_bound, FamilyConfig};
use intrinsic_lab::certificate::Witness;
use intrinsic_lab::domain::{theorem_a_window, theorem_b_window, DomainPoint, DomainSpec};
use intrinsic_lab::experiments::{
    recheck_gap_scan, recheck_preserves_certified, run_bounds, run_experiment, run_gap_scan, run_sweep,
    ExperimentConfig, ExperimentKind,
};
use intrinsic_lab::hyperbolic::{mobius_automorphism, poincare_distance, DiskPoint};
use intrinsic_lab::kahler_einstein::{
    eq5_check, infinitesimal_comparison, ke_bracket, ke_distance_estimate, polydisk_origin_metric,
    solve_ke, solve_ke_outcome, volume_determinant_check, GridConfig,
};
use intrinsic_lab::kobayashi::{chain_ladder, lempert_upper_bound, OptConfig, WaypointStrategy};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUADRATURE_TOL: f64 = 1e-6;
const GOLDEN_REL_TOL: f64 = 1e-12;
const POLYDISK_AGREEMENT: f64 = 1e-6;
const K2_CONSTANT: f64 = 1e-9;
const K2_TARGET_TOL: f64 = 1e-4;
const L_TOTAL_INCREASE: f64 = 0.2;
const PLATEAU_TOL: f64 = 1e-3;
const KE_METRIC_REL: f64 = 1e-2;
const KE_DISTANCE_TOL: f64 = 2e-2;
const KE_RESIDUAL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---- 1: hyperbolic core ----

/// Adaptive Simpson on [a, b].
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn random_disk_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..std::f64::consts::TAU))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let one = Complex64::new(1.0, 0.0);
    let mut worst_quad = 0.0f64;
    for case in 0..10_000 {
        let (a, b, c) = (random_disk_point(&mut rng), random_disk_point(&mut rng), random_disk_point(&mut rng));
        let dp = |z| DiskPoint::new(z).unwrap();
        let d = |p, q| poincare_distance(dp(p), dp(q)).value;
        let (ab, bc, ac) = (d(a, b), d(b, c), d(a, c));
        check(ac <= ab + bc + 1e-10 * (1.0 + ac), format!("case {case}: triangle inequality"))?;
        let moved = poincare_distance(mobius_automorphism(dp(c), dp(a)), mobius_automorphism(dp(c), dp(b))).value;
        check((moved - ab).abs() <= 1e-8 * (1.0 + ab), format!("case {case}: Möbius invariance"))?;
        // length of the geodesic γ(t) = (tu + a)/(1 + ā t u), t ∈ [0, p], from the density
        let w = (b - a) / (one - a.conj() * b);
        let p = w.norm();
        if p == 0.0 {
            continue;
        }
        let u = w / p;
        let density = |t: f64| {
            let g = (u * t + a) / (one + a.conj() * u * t);
            let dg = u * (1.0 - a.norm_sqr()) / (one + a.conj() * u * t).powi(2);
            dg.norm() / (1.0 - g.norm_sqr())
        };
        let length = simpson(&density, 0.0, p, 1e-11);
        let err = (length - ab).abs();
        worst_quad = worst_quad.max(err);
        check(err <= QUADRATURE_TOL, format!("case {case}: quadrature {length} vs {ab}"))?;
    }
    Ok(format!("10000 cases, worst quadrature error {worst_quad:.2e}"))
}

// ---- 2: threshold tables ----

fn criterion_2() -> Outcome {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/thresholds_golden.csv"))
        .map_err(|e| e.to_string())?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let (mut a_rows, mut b_rows, mut worst) = (0, 0, 0.0f64);
    let mut saw_small = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        let n: usize = rec[1].parse().unwrap();
        let rep = if &rec[0] == "A" {
            a_rows += 1;
            theorem_a_window(n, f(2), f(3)).map_err(|e| e.to_string())?
        } else {
            b_rows += 1;
            theorem_b_window(n, f(2)).map_err(|e| e.to_string())?
        };
        for (got, want) in [(rep.epsilon, f(3)), (rep.epsilon_bound, f(4)), (rep.x_lower, f(5)), (rep.x_upper, f(6))] {
            let rel = (got - want).abs() / want.abs();
            worst = worst.max(rel);
            check(rel <= GOLDEN_REL_TOL, format!("{} n={n} r={}: {got} vs {want}", &rec[0], &rec[2]))?;
        }
        if &rec[0] == "B" && n == 3 && f(2) == 0.05 {
            saw_small = (rep.epsilon - 1.25e-4).abs() < 1e-18 && (rep.x_lower - 0.0388).abs() < 1e-4;
        }
    }
    check(a_rows >= 50, format!("only {a_rows} Theorem A rows"))?;
    check(saw_small, "n=3, r=0.05 Theorem B row missing or wrong")?;
    Ok(format!("{a_rows} A rows, {b_rows} B rows, worst relative error {worst:.1e}"))
}

// ---- 3: polydisk agreement ----

fn polydisk_pairs() -> Vec<(DomainSpec, DomainPoint, DomainPoint)> {
    let spec2 = DomainSpec::new(2, 0.5, 1.0, 1.0).unwrap();
    let spec3 = DomainSpec::new(3, 0.5, 0.9, 1.0).unwrap();
    let mut pairs: Vec<_> = (1..=7)
        .map(|k| (spec2, DomainPoint::origin(2), DomainPoint::diagonal(2, k as f64 / 10.0)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..13 {
        let spec = if k % 2 == 0 { spec2 } else { spec3 };
        let pt = |rng: &mut ChaCha8Rng| {
            DomainPoint::new(
                (0..spec.n)
                    .map(|_| Complex64::from_polar(spec.big_r * rng.gen_range(0.0..0.9), rng.gen_range(0.0..6.3)))
                    .collect(),
            )
        };
        let (x, y) = (pt(&mut rng), pt(&mut rng));
        pairs.push((spec, x, y));
    }
    pairs
}

fn polydisk_oracle(big_r: f64, x: &DomainPoint, y: &DomainPoint) -> f64 {
    x.coords
        .iter()
        .zip(&y.coords)
        .map(|(a, b)| {
            let (a, b) = (a / big_r, b / big_r);
            ((a - b) / (Complex64::new(1.0, 0.0) - a.conj() * b)).norm().atanh()
        })
        .fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let (fam, opt) = (FamilyConfig::default(), OptConfig::default());
    let pairs = polydisk_pairs();
    let mut worst = 0.0f64;
    for (spec, x, y) in &pairs {
        let c = best_lower_bound(spec, x, y, &fam).map_err(|e| e.to_string())?.value();
        let l = lempert_upper_bound(spec, x, y, &opt).map_err(|e| e.to_string())?.value();
        let truth = polydisk_oracle(spec.big_r, x, y);
        worst = worst.max((c - l).abs()).max((c - truth).abs()).max((l - truth).abs());
        check(
            (c - l).abs() <= POLYDISK_AGREEMENT && (c - truth).abs() <= POLYDISK_AGREEMENT,
            format!("n={} {:?} -> {:?}: c {c}, l {l}, closed form {truth}", spec.n, x.coords, y.coords),
        )?;
    }
    Ok(format!("{} pairs, worst disagreement {worst:.1e}", pairs.len()))
}

// ---- 4: global bracket ----

fn criterion_4() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05},
            "points": [
              {"x": [0, 0], "y": [0.2, 0.2]},
              {"x": [0.3, 0], "y": [0, 0.3]},
              {"x": [0.1, 0.1], "y": [0.1, 0.1]},
              {"x": [[0.1, 0.05], 0], "y": [0.15, 0.15]},
              {"x": [0.05, -0.2], "y": [-0.1, 0.25]},
              {"x": [0.6, 0.02], "y": [0.02, 0.6]}
            ]}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut rows = run_bounds(&cfg).map_err(|e| e.to_string())?;
    let mut violations = 0;
    for (spec, x, y) in polydisk_pairs() {
        let c = best_lower_bound(&spec, &x, &y, &FamilyConfig::default()).map_err(|e| e.to_string())?.value();
        let v: Vec<f64> = chain_ladder(&spec, 3, &x, &y, &WaypointStrategy::Axis, &OptConfig::default())
            .map_err(|e| e.to_string())?
            .iter()
            .map(|c| c.as_ref().map_or(f64::INFINITY, |c| c.value()))
            .collect();
        if !(c <= v[2] && v[2] <= v[1] && v[1] <= v[0]) {
            violations += 1;
        }
    }
    rows.retain(|r| !r.ordering_ok);
    violations += rows.len();
    check(violations == 0, format!("{violations} pairs break c_lb <= k3 <= k2 <= l"))?;
    Ok("26 pairs, zero ordering violations".into())
}

// ---- 5: ε sweep ----

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"domain": {"n": 2, "r": 0.8, "R": 0.8, "epsilon": 0.1},
            "opt_config": {"refine_waypoints": false},
            "sweep": {"x": 0.4, "y": 0.4, "epsilons": [0.1, 0.05, 0.01, 0.002]}}"#,
    )
    .map_err(|e| e.to_string())?;
    let (table, bad) = run_sweep(&cfg).map_err(|e| e.to_string())?;
    check(bad == 0, format!("{bad} rows break the ordering"))?;
    let k2: Vec<f64> = table.rows.iter().map(|r| r.k2_ub).collect();
    let spread = k2.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - k2.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    check(spread <= K2_CONSTANT, format!("k2 varies by {spread:.2e}"))?;
    let target = 2.0 * 0.5f64.atanh();
    check((k2[0] - target).abs() <= K2_TARGET_TOL, format!("k2 = {} vs {target}", k2[0]))?;
    // rows are listed with ε decreasing
    let l: Vec<f64> = table.rows.iter().map(|r| r.l_ub).collect();
    check(l.windows(2).all(|w| w[1] >= w[0]), format!("l not monotone: {l:?}"))?;
    let rise = l[l.len() - 1] - l[0];
    check(rise >= L_TOTAL_INCREASE, format!("l rises by only {rise}"))?;
    check(table.plateau <= PLATEAU_TOL, format!("plateau {}", table.plateau))?;
    Ok(format!("k2 = {:.10}, l = {l:.4?}, plateau {:.1e}", k2[0], table.plateau))
}

// ---- 6: polydisk metric ----

fn criterion_6() -> Outcome {
    let big_r = 1.0;
    let spec = DomainSpec::new(2, 0.8, big_r, 1.0).unwrap();
    // the background potential is already exact here, so start Newton away from it
    let bump = |t1: f64, t2: f64| 0.3 * (1.0 - t1 * t1 / (big_r * big_r)) * (1.0 - t2 * t2 / (big_r * big_r));
    let out = solve_ke_outcome(&spec, &GridConfig { resolution: 128, ..GridConfig::default() }, Some(&bump))
        .map_err(|e| e.to_string())?;
    if let Some(e) = out.failure {
        return Err(e.to_string());
    }
    let g = out.grid;
    check(g.max_log_residual <= KE_RESIDUAL, format!("residual {:.2e}", g.max_log_residual))?;
    let exact = |t: f64| 2.0 * big_r * big_r / (big_r * big_r - t * t).powi(2);
    let mut worst = 0.0f64;
    for i in 0..g.size {
        for j in 0..g.size {
            if !g.in_core(i, j) {
                continue;
            }
            let [g11, g12, g22] = g.node_metric(i, j).unwrap();
            let (e1, e2) = (exact(g.t(i)), exact(g.t(j)));
            worst = worst.max((g11 / e1 - 1.0).abs()).max((g22 / e2 - 1.0).abs()).max(g12.abs() / e1.min(e2));
        }
    }
    check(worst <= KE_METRIC_REL, format!("metric error {worst:.2e}"))?;
    let mut dist_err = 0.0f64;
    for s in [0.2, 0.4, 0.6] {
        let d = ke_distance_estimate(&g, &DomainPoint::origin(2), &DomainPoint::diagonal(2, s * big_r))
            .map_err(|e| e.to_string())?
            .value();
        let truth = 2.0 * f64::atanh(s);
        dist_err = dist_err.max((d - truth).abs());
        check((d - truth).abs() <= KE_DISTANCE_TOL, format!("x/R = {s}: {d} vs {truth}"))?;
    }
    Ok(format!(
        "{} Newton steps from a perturbed start, metric error {worst:.1e}, distance error {dist_err:.1e}, residual {:.1e}",
        g.iterations, g.max_log_residual
    ))
}

// ---- 7: the small-cap domain ----

fn criterion_7() -> Outcome {
    let spec = DomainSpec::new(2, 0.8, 1.0, 0.05).unwrap();
    let g = solve_ke(&spec, &GridConfig { resolution: 64, ..GridConfig::default() }).map_err(|e| e.to_string())?;
    let eq5 = eq5_check(&g, 1.0);
    check(eq5.passed, format!("origin bound: {} < {}", eq5.sqrt_omega_11, eq5.bound))?;
    let origin = DomainPoint::origin(2);
    let fam = FamilyConfig::default();
    let far = DomainPoint::diagonal(2, 0.2);
    let best = best_lower_bound(&spec, &origin, &far, &fam).map_err(|e| e.to_string())?;
    let Witness::Map(map) = &best.witness else {
        return Err("best witness is not a map".into());
    };
    let inf = infinitesimal_comparison(&g, map, &origin, 8, 0).map_err(|e| e.to_string())?;
    check(inf.rows[0].strict && inf.rows[1].strict, format!("X1/X2 margins {} {}", inf.rows[0].margin, inf.rows[1].margin))?;
    let mut margins = Vec::new();
    for y in [DomainPoint::diagonal(2, 0.15), far.clone()] {
        let c = best_lower_bound(&spec, &origin, &y, &fam).map_err(|e| e.to_string())?;
        let k = chain_ladder(&spec, 3, &origin, &y, &WaypointStrategy::Axis, &OptConfig::default())
            .map_err(|e| e.to_string())?
            .pop()
            .flatten()
            .ok_or("no upper certificate")?;
        let rep = ke_bracket(&g, &origin, &y, &c, &k).map_err(|e| e.to_string())?;
        check(rep.lower_margin > 0.0, format!("bracket margin {}", rep.lower_margin))?;
        margins.push(rep.lower_margin);
    }
    Ok(format!(
        "sqrt(omega_11) = {:.4} >= {}, witness {}, X1/X2 margin {:.3}, bracket margins {margins:.3?}",
        eq5.sqrt_omega_11, eq5.bound, inf.witness, inf.rows[0].margin.min(inf.rows[1].margin)
    ))
}

// ---- 8: volume bound ----

fn criterion_8() -> Outcome {
    let closed = volume_determinant_check(&polydisk_origin_metric(2, 1.0), 0.0, 2, 0.8, 1.0).map_err(|e| e.to_string())?;
    check(closed.applicable && closed.passed, format!("closed form {closed:?}"))?;
    let spec = DomainSpec::new(2, 0.8, 1.0, 0.7).unwrap();
    let g = solve_ke(&spec, &GridConfig { resolution: 64, ..GridConfig::default() }).map_err(|e| e.to_string())?;
    let solved = volume_determinant_check(&g.origin_metric, g.origin_margin, 2, spec.r, spec.epsilon).map_err(|e| e.to_string())?;
    check(solved.applicable && solved.passed, format!("solved grid {solved:?}"))?;
    Ok(format!(
        "closed form {:.3} <= {:.3}, solved grid {:.3} <= {:.3}",
        closed.lhs, closed.rhs, solved.lhs, solved.rhs
    ))
}

// ---- 9: gap scan ----

fn criterion_9() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 1.0},
            "delta": 0.5,
            "opt_config": {"starts": 2},
            "gap_scan": {"level": 5, "steps": 12}}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut scan = run_gap_scan(&cfg).map_err(|e| e.to_string())?;
    let certified = scan.rows.iter().filter(|r| r.certified).count();
    check(certified >= 1, "no certified row")?;
    recheck_gap_scan(&cfg, &mut scan, 10).map_err(|e| e.to_string())?;
    check(recheck_preserves_certified(&scan), "a certified row was lost at 10x effort")?;
    Ok(format!("{certified}/{} rows certified, all kept at 10x effort", scan.rows.len()))
}

// ---- 10: determinism ----

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05},
            "opt_config": {"starts": 4},
            "grid_config": {"resolution": 32},
            "gap_scan": {"level": 3, "steps": 3},
            "points": [{"x": [0, 0], "y": [0.15, 0.15]}, {"x": [0.3, 0], "y": [0, 0.3]}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (k, threads) in [0usize, 1].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            for kind in [ExperimentKind::Thresholds, ExperimentKind::Bounds, ExperimentKind::GapScan, ExperimentKind::Ke] {
                run_experiment(kind, &cfg, &dir).map_err(|e| e.to_string())?;
            }
            Ok::<(), String>(())
        })?;
        runs.push(read_dir_sorted(&dir));
    }
    check(runs[0].len() == 6, format!("only {} artifacts", runs[0].len()))?;
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        check(a == b, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts identical across runs and thread counts", runs[0].len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("1 hyperbolic core", Duration::from_secs(5), criterion_1),
        ("2 threshold golden files", Duration::from_secs(1), criterion_2),
        ("3 polydisk agreement", Duration::from_secs(60), criterion_3),
        ("4 global bracket", Duration::from_secs(600), criterion_4),
        ("5 epsilon sweep", Duration::from_secs(600), criterion_5),
        ("6 polydisk metric", Duration::from_secs(300), criterion_6),
        ("7 small-cap domain", Duration::from_secs(300), criterion_7),
        ("8 volume bound", Duration::from_secs(60), criterion_8),
        ("9 gap scan", Duration::from_secs(600), criterion_9),
        ("10 determinism", Duration::from_secs(600), criterion_10),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let within = elapsed <= budget;
        let (status, detail) = match (&result, within) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {budget:?} budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("[{status}] criterion {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
