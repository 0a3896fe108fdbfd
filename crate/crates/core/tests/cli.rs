use std::path::Path;
use std::process::{Command, Output};

use fissure::harness::scenario_dir;

fn fissure(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fissure"))
        .args(args)
        .env("FISSURE_OUT", out)
        .output()
        .unwrap()
}

fn scenario(name: &str) -> String {
    scenario_dir().join(name).display().to_string()
}

#[test]
fn run_writes_verdict_and_report_under_the_env_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = fissure(&["run", &scenario("thmD-case1.toml")], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("thmD-case1") && stdout.contains("match"));
    let root = dir.path().join("thmD-case1");
    for f in [
        "verdict.json",
        "verdicts.csv",
        "tunnel_thmD-case1.csv",
        "plot.gp",
        "probes/probes_tunnel.csv",
    ] {
        assert!(root.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario_dir().join("thmD-case1.toml")).unwrap();
    let path = dir.path().join("wrong.toml");
    std::fs::write(
        &path,
        text.replace(
            "expected = \"line-propagation\"",
            "expected = \"localization\"",
        ),
    )
    .unwrap();
    let out = fissure(
        &[
            "--out",
            &dir.path().join("o").display().to_string(),
            "run",
            &path.display().to_string(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("MISMATCH"));
    assert!(dir.path().join("o/thmD-case1/verdict.json").is_file());
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = fissure(&["run", "/nonexistent/scenario.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = fissure(&["eigen", "torus", "64"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = fissure(
        &["--budget", "0", "run", &scenario("thmD-case1.toml")],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--budget"));
}

#[test]
fn eigen_prints_the_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = fissure(&["eigen", "interval", "256"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let value: f64 = text.split_whitespace().nth(2).unwrap().parse().unwrap();
    let exact = std::f64::consts::PI.powi(2) / 4.0;
    assert!((value - exact).abs() < 5.0 * (2.0f64 / 256.0).powi(2));
}

#[test]
fn verify_barriers_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = fissure(&["verify-barriers", "--cells", "16,32"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let csv = std::fs::read_to_string(dir.path().join("barriers.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn sweep_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("p.toml");
    std::fs::write(
        &sweep,
        format!(
            "base = {:?}\nbudget = 4\n\n[axes]\np = [1.4, 1.5]\n",
            scenario("thmD-case1.toml")
        ),
    )
    .unwrap();
    let out = fissure(
        &["--workers", "1", "sweep", &sweep.display().to_string()],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log = dir.path().join("thmD-case1-sweep.jsonl");
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 2);
    let phase = std::fs::read(dir.path().join("phase.csv")).unwrap();

    let again = dir.path().join("again");
    let out = fissure(
        &[
            "--out",
            &again.display().to_string(),
            "report",
            &log.display().to_string(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(again.join("phase.csv")).unwrap(), phase);

    let tight = dir.path().join("tight.toml");
    std::fs::write(
        &tight,
        std::fs::read_to_string(&sweep)
            .unwrap()
            .replace("budget = 4", "budget = 1"),
    )
    .unwrap();
    let out = fissure(&["sweep", &tight.display().to_string()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
