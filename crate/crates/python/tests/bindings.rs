use fissure_py::{
    ground_state, half_width_threshold, heat_kernel, outcomes, Curve, Scenario, Verdict,
};
use pyo3::prelude::*;

#[test]
fn spectral_and_kernel_helpers() {
    let lam = ground_state("interval", 256).unwrap();
    assert!((lam - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-3);
    assert!(ground_state("torus", 64).is_err());
    assert!(ground_state("ball3", 64).unwrap() > ground_state("disk", 64).unwrap());
    let k = heat_kernel(vec![0.0], vec![0.0], 1.0).unwrap();
    assert!((k - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    let d = half_width_threshold(0.1, 2.0, 1.0);
    assert!((d * d - 0.04).abs() < 1e-12);
}

#[test]
fn curve_distance_vanishes_on_the_curve() {
    let c = Curve::straight(vec![1.0, 0.0], 1.0, 401).unwrap();
    assert_eq!(c.dim(), 2);
    assert!(c.distance(vec![0.5, 0.0], 0.5).unwrap().abs() < 1e-9);
    assert!((c.distance(vec![0.5, 0.3], 0.5).unwrap() - 0.3).abs() < 1e-9);
    let back = Curve::from_table(&c.to_table()).unwrap();
    assert_eq!(
        back.position_at(0.25).unwrap(),
        c.position_at(0.25).unwrap()
    );
}

#[test]
fn shipped_scenario_runs_and_round_trips() {
    assert!(Scenario::shipped().iter().any(|n| n == "thmD-case1.toml"));
    assert!(Scenario::load_shipped("missing.toml").is_err());
    pyo3::prepare_freethreaded_python();
    Python::with_gil(|py| {
        let s = Scenario::load_shipped("thmD-case1.toml").unwrap();
        assert!(outcomes().contains(&s.expected()));
        let v = s.run(py).unwrap();
        assert!(v.matches());
        assert_eq!(v.rederive(), v.outcome());
        assert!(!v.half_widths().is_empty());
        let back = Verdict::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(back.to_json().unwrap(), v.to_json().unwrap());
    });
}
