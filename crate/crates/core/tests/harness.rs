use std::collections::BTreeMap;
use std::io::Write;

use fissure::geometry::Curve;
use fissure::harness::{
    derive_outcome, emit_report, outcome_from_traces, read_log, run_scenario, run_scenario_cached,
    scenario_dir, sweep, sweep_points, DecisionRules, Evidence, Outcome, ReportFormat, RunCache,
    Scenario, SweepAxes, Verdict, SHIPPED_SCENARIOS,
};
use fissure::potential::DecayProfile;
use fissure::spectral::{
    alpha_threshold, blowup_functional, dirichlet_ground_state, ConstantsSource, DecayConstants,
    DivergenceRule, EigenDomain, FunctionalKind, TraceVerdict,
};

fn shipped(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(name)).unwrap()
}

#[test]
fn shipped_scenarios_match_and_rederive() {
    // The two rescaled ball scenarios are covered by the sufficiency test.
    let cache = RunCache::new();
    for name in SHIPPED_SCENARIOS
        .iter()
        .filter(|n| !n.starts_with("thmC-straight") && !n.starts_with("thmC-weak"))
    {
        let s = shipped(name);
        let (v, _) = run_scenario_cached(&s, &cache).unwrap();
        if s.regression {
            assert_eq!(v.outcome, s.expected, "{name}");
        }
        let json = serde_json::to_string(&v).unwrap();
        let back: Verdict = serde_json::from_str(&json).unwrap();
        assert_eq!(
            derive_outcome(&back.evidence, &back.rules),
            v.outcome,
            "{name}"
        );
    }
}

#[test]
fn analytic_trace_alone_agrees_on_straight_curve_scenarios() {
    let cache = RunCache::new();
    for name in ["thmC-straight.toml", "thmC-weak.toml", "thmC-control.toml"] {
        let s = shipped(name);
        let (v, _) = run_scenario_cached(&s, &cache).unwrap();
        assert_eq!(v.outcome, s.expected, "{name}");
        let stripped = Evidence {
            traces: v.evidence.traces.clone(),
            ..Default::default()
        };
        assert!(!stripped.traces.is_empty(), "{name}");
        assert_eq!(outcome_from_traces(&stripped.traces), v.outcome, "{name}");
    }
}

#[test]
fn alpha_axis_flips_at_the_analytic_threshold() {
    let p = 2.0;
    let amplitude = 50.0;
    let profile = DecayProfile::inverse_square(amplitude).unwrap();
    let lambda0 = dirichlet_ground_state(EigenDomain::Ball { dim: 2 }, 256)
        .unwrap()
        .lambda;
    let curve = Curve::straight(&[1.0, 0.0], 40.0, 401).unwrap();
    let alpha0 = alpha_threshold(
        amplitude,
        p,
        &DecayConstants {
            lambda0,
            ..Default::default()
        },
    );
    let eps = [0.2, 0.1, 0.05, 0.025];
    for (factor, expected) in [
        (0.25, TraceVerdict::Propagation),
        (0.5, TraceVerdict::Propagation),
        (2.0, TraceVerdict::Bounded),
        (4.0, TraceVerdict::Bounded),
    ] {
        let trace = blowup_functional(
            FunctionalKind::A,
            p,
            factor * alpha0,
            2,
            ConstantsSource::Curve {
                lambda0,
                sigma_tau: 0.0,
                curve: &curve,
            },
            profile,
            &eps,
            DivergenceRule::default(),
        )
        .unwrap();
        assert_eq!(trace.verdict, expected, "α = {factor} α0");
    }
}

fn coarse_straight() -> Scenario {
    let mut s = shipped("thmC-straight.toml");
    let text = s.to_toml().unwrap().replace("m = 32", "m = 12");
    s = Scenario::from_toml(&text, "coarse").unwrap();
    let r = s.rescaled.as_mut().unwrap();
    r.tau0 = 0.03;
    s
}

#[test]
fn amplitude_sweep_crosses_once() {
    let dir = tempfile::tempdir().unwrap();
    let axes = SweepAxes {
        amplitude: vec![0.25, 1.0, 4.0, 16.0, 64.0],
        ..Default::default()
    };
    let points = sweep_points(&coarse_straight(), &axes, 5).unwrap();
    let log = dir.path().join("log.jsonl");
    let result = sweep(&points, &log, 1, None).unwrap();
    assert!(result.skipped.is_empty());
    let outcomes: Vec<Outcome> = result.verdicts.iter().map(|v| v.outcome).collect();
    assert_eq!(
        outcomes.first(),
        Some(&Outcome::Localization),
        "{outcomes:?}"
    );
    assert_eq!(outcomes.last(), Some(&Outcome::Propagation), "{outcomes:?}");
    assert_eq!(
        outcomes.windows(2).filter(|w| w[0] != w[1]).count(),
        1,
        "{outcomes:?}"
    );

    emit_report(&result.verdicts, dir.path(), &[ReportFormat::Csv]).unwrap();
    let boundary = std::fs::read_to_string(dir.path().join("boundary.csv")).unwrap();
    assert_eq!(boundary.lines().count(), 2);
    assert!(boundary.lines().nth(1).unwrap().ends_with(",1"));
}

#[test]
fn sweep_resumes_without_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sweep.jsonl");
    let axes = SweepAxes {
        p: vec![1.4, 1.5],
        ..Default::default()
    };
    let points = sweep_points(&shipped("thmD-case1.toml"), &axes, 2).unwrap();

    // A budget that is already spent starts nothing.
    let nothing = sweep(&points, &log, 1, Some(std::time::Duration::ZERO)).unwrap();
    assert!(nothing.verdicts.is_empty());
    assert_eq!(nothing.skipped.len(), 2);

    let first = sweep(&points[..1], &log, 1, None).unwrap();
    assert_eq!(first.verdicts.len(), 1);
    // A torn line from an interrupted write is ignored on resume.
    std::fs::OpenOptions::new()
        .append(true)
        .open(&log)
        .unwrap()
        .write_all(b"{\"key\":\"thmD-case1|p=1.5e0\",\"verd")
        .unwrap();
    let all = sweep(&points, &log, 1, None).unwrap();
    assert_eq!(all.verdicts.len(), 2);
    assert_eq!(
        all.verdicts[0], first.verdicts[0],
        "resumed verdict must come from the log"
    );
    assert_eq!(read_log(&log).unwrap().len(), 2);

    let again = sweep(&points, &log, 1, None).unwrap();
    assert_eq!(again.verdicts, all.verdicts);
    assert_eq!(read_log(&log).unwrap().len(), 2);
}

#[test]
fn empty_axes_run_the_base_scenario() {
    let base = shipped("thmD-case1.toml");
    let points = sweep_points(&base, &SweepAxes::default(), 1).unwrap();
    assert_eq!(points.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    let result = sweep(&points, &dir.path().join("log.jsonl"), 1, None).unwrap();
    let (direct, _) = run_scenario(&base).unwrap();
    assert_eq!(result.verdicts[0].evidence, direct.evidence);
}

fn synthetic(name: &str, amplitude: f64, alpha: f64, outcome: Outcome) -> Verdict {
    Verdict {
        scenario: name.into(),
        expected: Outcome::Unknown,
        outcome,
        regression: false,
        rules: DecisionRules::default(),
        params: BTreeMap::from([
            ("amplitude".to_string(), amplitude),
            ("alpha".to_string(), alpha),
        ]),
        evidence: Evidence::default(),
        wall_time: 1.0,
    }
}

#[test]
fn report_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = run_scenario(&shipped("thmC-control.toml")).unwrap();
    let files = emit_report(std::slice::from_ref(&v), dir.path(), &[ReportFormat::Csv]).unwrap();
    let verdicts = std::fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
    assert_eq!(verdicts.lines().count(), 2);
    let traces: Vec<_> = files
        .iter()
        .filter(|f| {
            f.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("trace_")
        })
        .collect();
    assert_eq!(traces.len(), 1);

    let dir = tempfile::tempdir().unwrap();
    let mut twelve = Vec::new();
    for (i, a) in [1.0, 2.0, 4.0, 8.0].iter().enumerate() {
        for alpha in [0.1, 0.2, 0.4] {
            let outcome = if i >= 2 {
                Outcome::Propagation
            } else {
                Outcome::Localization
            };
            twelve.push(synthetic(&format!("p{i}-{alpha}"), *a, alpha, outcome));
        }
    }
    emit_report(
        &twelve,
        dir.path(),
        &[ReportFormat::Csv, ReportFormat::PlotScript],
    )
    .unwrap();
    let phase = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    assert_eq!(phase.lines().count(), 13);
    let boundary = std::fs::read_to_string(dir.path().join("boundary.csv")).unwrap();
    assert_eq!(boundary.lines().count(), 4);
    assert!(boundary.contains("2.000000000000e0,4.000000000000e0,1"));
    let script = std::fs::read_to_string(dir.path().join("plot.gp")).unwrap();
    assert!(script.contains("phase.csv"));
}

#[test]
fn report_bytes_ignore_wall_time() {
    let a = synthetic("x", 1.0, 0.1, Outcome::Propagation);
    let mut b = a.clone();
    b.wall_time = 123.0;
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&[a], da.path(), &[ReportFormat::Csv]).unwrap();
    emit_report(&[b], db.path(), &[ReportFormat::Csv]).unwrap();
    for f in ["verdicts.csv", "phase.csv"] {
        assert_eq!(
            std::fs::read(da.path().join(f)).unwrap(),
            std::fs::read(db.path().join(f)).unwrap()
        );
    }
}

#[test]
fn report_needs_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_report(&[], dir.path(), &[ReportFormat::Csv]).is_err());
}

#[test]
fn invalid_scenarios_are_rejected() {
    let text = std::fs::read_to_string(scenario_dir().join("thmD-case1.toml")).unwrap();
    assert!(Scenario::from_toml(
        &text.replace("expected = \"line-propagation\"", "expected = \"sideways\""),
        "x"
    )
    .is_err());
    assert!(Scenario::from_toml(&text.replace("p = 1.5", "p = 0.5"), "x").is_err());
    assert!(Scenario::from_toml(&text.replace("[tunnel]", "[tunnel]\nbogus = 1"), "x").is_err());
    let no_rules = text.split("[rules]").next().unwrap();
    assert!(Scenario::from_toml(no_rules, "x").is_err());
}
