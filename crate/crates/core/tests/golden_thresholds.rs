use intrinsic_lab::domain::{theorem_a_window, theorem_b_window, ThresholdReport};
use intrinsic_lab::experiments::{run_thresholds, ExperimentConfig};

const GOLDEN: &str = include_str!("golden/thresholds_golden.csv");

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
}

fn golden_rows() -> Vec<(String, usize, f64, f64, f64, f64, f64, String)> {
    let mut rdr = csv::Reader::from_reader(GOLDEN.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            (r[0].to_string(), r[1].parse().unwrap(), f(2), f(3), f(4), f(5), f(6), r[7].to_string())
        })
        .collect()
}

fn check(rep: &ThresholdReport, row: &(String, usize, f64, f64, f64, f64, f64, String)) {
    let (_, n, r, _, bound, lo, hi, cond) = row;
    assert!(close(rep.epsilon_bound, *bound), "n={n} r={r}: bound {} vs {bound}", rep.epsilon_bound);
    assert!(close(rep.x_lower, *lo), "n={n} r={r}: x_lower {} vs {lo}", rep.x_lower);
    assert!(close(rep.x_upper, *hi), "n={n} r={r}: x_upper {} vs {hi}", rep.x_upper);
    assert_eq!(rep.window_nonempty, lo < hi);
    let expected = match cond.as_str() {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    };
    assert_eq!(rep.necessary_condition, expected);
}

#[test]
fn windows_match_high_precision_values() {
    let rows = golden_rows();
    assert!(rows.iter().filter(|r| r.0 == "A").count() >= 50);
    for row in &rows {
        let rep = if row.0 == "A" {
            theorem_a_window(row.1, row.2, row.3).unwrap()
        } else {
            let rep = theorem_b_window(row.1, row.2).unwrap();
            assert!(close(rep.epsilon, row.3));
            rep
        };
        check(&rep, row);
    }
}

#[test]
fn small_radius_theorem_b_row() {
    let rep = theorem_b_window(3, 0.05).unwrap();
    assert!(close(rep.epsilon, 1.25e-4));
    assert!((rep.x_lower - 0.0388).abs() < 1e-4);
    assert!(rep.window_nonempty);
}

#[test]
fn default_table_covers_the_golden_grid() {
    let cfg = ExperimentConfig::from_json(r#"{"domain": {"n": 2, "r": 0.8, "R": 1.0, "epsilon": 0.05}}"#).unwrap();
    let table = run_thresholds(&cfg).unwrap();
    let rows = golden_rows();
    assert_eq!(table.len(), rows.len());
    for (rep, row) in table.iter().zip(&rows) {
        assert_eq!(format!("{:?}", rep.theorem), row.0);
        assert_eq!(rep.n, row.1);
        check(rep, row);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(theorem_a_window(1, 0.5, 0.01).is_err());
    assert!(theorem_a_window(2, 1.5, 0.01).is_err());
    assert!(theorem_a_window(2, 0.5, 0.0).is_err());
    assert!(theorem_b_window(2, 0.5).is_err());
}
