use intrinsic_lab::domain::{DomainPoint, DomainSpec};
use intrinsic_lab::kahler_einstein::{
    eq5_check, ke_distance_estimate, polydisk_origin_metric, solve_ke, volume_determinant_check,
    GridConfig,
};

fn grid(resolution: usize) -> GridConfig {
    GridConfig {
        resolution,
        ..GridConfig::default()
    }
}

#[test]
fn polydisk_grid_reproduces_the_product_metric() {
    let big_r = 0.9;
    let spec = DomainSpec::new(2, 0.5, big_r, 1.0).unwrap();
    let g = solve_ke(&spec, &grid(48)).unwrap();
    // ∂∂̄ of -2 log(1 - |z|²/R²)
    let exact = |t: f64| 2.0 * big_r * big_r / (big_r * big_r - t * t).powi(2);
    for i in 0..g.size {
        for j in 0..g.size {
            if !g.in_core(i, j) {
                continue;
            }
            let (t1, t2) = (g.t(i), g.t(j));
            let [g11, g12, g22] = g.node_metric(i, j).unwrap();
            assert!((g11 / exact(t1) - 1.0).abs() < 1e-2);
            assert!((g22 / exact(t2) - 1.0).abs() < 1e-2);
            assert!(g12.abs() < 1e-2 * exact(t1).max(exact(t2)));
        }
    }
    for s in [0.3, 0.5] {
        let x = s * big_r;
        let d = ke_distance_estimate(&g, &DomainPoint::origin(2), &DomainPoint::diagonal(2, x)).unwrap();
        let truth = 2.0 * s.atanh();
        assert!((d.value() - truth).abs() < 2e-2, "{} vs {truth}", d.value());
    }
}

#[test]
fn small_cap_domain_passes_the_origin_bound() {
    let spec = DomainSpec::new(2, 0.8, 1.0, 0.05).unwrap();
    let g = solve_ke(&spec, &grid(32)).unwrap();
    assert!(g.max_log_residual <= 1e-6);
    let rep = eq5_check(&g, 1.0);
    assert!(rep.passed);
    // the product cap forces the metric above the polydisk value
    assert!(rep.sqrt_omega_11 > rep.polydisk_value);
}

#[test]
fn closed_form_polydisk_volume_bound() {
    for (r, big_r) in [(0.8, 1.0), (0.5, 0.7)] {
        let m = polydisk_origin_metric(2, big_r);
        let rep = volume_determinant_check(&m, 0.0, 2, r, 1.0).unwrap();
        assert!(rep.applicable && rep.passed, "{rep:?}");
    }
    // below the threshold ε < r² nothing is asserted
    let rep = volume_determinant_check(&[2.0, 2.0], 0.0, 2, 0.8, 0.1).unwrap();
    assert!(!rep.applicable && !rep.passed);
}

#[test]
fn solver_rejects_other_dimensions() {
    let spec = DomainSpec::new(3, 0.5, 1.0, 0.1).unwrap();
    assert!(solve_ke(&spec, &grid(16)).is_err());
}
