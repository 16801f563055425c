use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use potstab::cli::report::{self, Table};
use serde_json::Value;

struct Run {
    code: i32,
    stderr: String,
    out: PathBuf,
}

fn run(dir: &Path, name: &str, command: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{name}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let Output { status, stderr, .. } = Command::new(env!("CARGO_BIN_EXE_potstab"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { code: status.code().unwrap(), stderr: String::from_utf8_lossy(&stderr).into_owned(), out }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column(t: &Table, name: &str, row: usize) -> String {
    let i = t.header.iter().position(|h| h == name).unwrap();
    t.rows[row][i].clone()
}

#[test]
fn energy_on_the_interval_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), "e", "energy", r#"{"domain": {"kind": "interval", "resolution": 1024}}"#, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let e = json(&r.out.join("energy.json"))["energy"].as_f64().unwrap();
    assert!((e + 1.0 / 24.0).abs() <= 1e-5);
    let t = Table::read(&r.out.join("energy_state.csv")).unwrap();
    assert_eq!(t.header, ["x", "u", "V", "f"]);
    assert_eq!(t.rows.len(), 1024);
}

#[test]
fn zero_source_has_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "box2d", "resolution": 16}, "problem": {"source": {"kind": "zero"}}}"#;
    let r = run(dir.path(), "z", "energy", cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r.out.join("energy.json"))["energy"].as_f64().unwrap(), 0.0);
}

#[test]
fn non_coercive_potential_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "interval", "resolution": 128},
                  "problem": {"potential": {"kind": "constant", "value": -20}}}"#;
    let r = run(dir.path(), "n", "energy", cfg, &[]);
    assert_eq!(r.code, 1);
    let report = json(&r.out.join("energy.json"));
    assert_eq!(report["status"], "not_admissible");
    assert!(report["error"].as_str().unwrap().contains("not admissible"));
    assert!(report["admissibility"]["margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn optimize_saturates_the_max_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "interval", "resolution": 256}, "problem": {"p": 2, "side": "max"}}"#;
    let r = run(dir.path(), "m", "optimize", cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = Table::read(&r.out.join("optimize_summary.csv")).unwrap();
    assert_eq!(t.rows.len(), 1);
    let norm: f64 = column(&t, "potential_norm", 0).parse().unwrap();
    assert!((norm - 1.0).abs() <= 1e-6);
    let profile = Table::read(&r.out.join("optimize_max_profile.csv")).unwrap();
    assert_eq!(profile.header, ["x", "v0", "V0"]);
    assert!(json(&r.out.join("optimize.json"))["max"]["constants"]["c1"].as_f64().unwrap() > 0.0);
}

#[test]
fn optimize_min_side_reports_the_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "box2d", "resolution": 16}, "problem": {"p": 3, "side": "min"}}"#;
    let r = run(dir.path(), "m", "optimize", cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = Table::read(&r.out.join("optimize_summary.csv")).unwrap();
    assert_eq!(column(&t, "side", 0), "min");
    assert_eq!(column(&t, "beta", 0).parse::<f64>().unwrap(), 12.0);
    let profile = Table::read(&r.out.join("optimize_min_profile.csv")).unwrap();
    assert_eq!(profile.header, ["x", "y", "u0", "W0"]);
}

#[test]
fn optimize_rejects_a_zero_source() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "interval", "resolution": 64}, "problem": {"source": {"kind": "zero"}}}"#;
    let r = run(dir.path(), "z", "optimize", cfg, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("degenerate"), "{}", r.stderr);
}

#[test]
fn iteration_cap_maps_to_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "interval", "resolution": 256}, "problem": {"side": "max"},
                  "solver": {"max_iter": 1, "tol": 1e-14}}"#;
    let r = run(dir.path(), "c", "optimize", cfg, &[]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

const SWEEP: &str = r#"{"domain": {"kind": "interval", "resolution": 96}, "sweep": {"samples": 6, "seed": 11}}"#;

#[test]
fn verify_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), "a", "verify", SWEEP, &["--threads", "1"]);
    let b = run(dir.path(), "b", "verify", SWEEP, &["--threads", "3"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(b.code, 0, "{}", b.stderr);
    let csv_a = std::fs::read(a.out.join("verify.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.out.join("verify.csv")).unwrap());
    assert_eq!(std::fs::read(a.out.join("verify.json")).unwrap(), std::fs::read(b.out.join("verify.json")).unwrap());

    let rows = report::read_rows(&a.out.join("verify.csv")).unwrap();
    assert!(rows.iter().all(|r| r.passed && r.margin.is_finite() && r.ms == 0));
    assert!(rows.iter().enumerate().all(|(i, r)| r.id == i));
    let again = dir.path().join("again.csv");
    report::write_rows(&again, &rows).unwrap();
    assert_eq!(std::fs::read(again).unwrap(), csv_a);

    let summary = json(&a.out.join("verify.json"));
    assert_eq!(summary["rows"].as_u64().unwrap() as usize, rows.len());
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    for side in ["max", "max_power", "max_state", "min", "min_state", "holder1", "holder2", "clarkson", "triangle", "strauss"] {
        assert_eq!(summary["sides"][side]["failed"], 0, "{side}");
    }
}

#[test]
fn seed_flag_changes_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), "a", "verify", SWEEP, &[]);
    let b = run(dir.path(), "b", "verify", SWEEP, &["--seed", "12"]);
    assert_eq!(b.code, 0, "{}", b.stderr);
    assert_ne!(std::fs::read(a.out.join("verify.csv")).unwrap(), std::fs::read(b.out.join("verify.csv")).unwrap());
    assert_eq!(json(&b.out.join("verify.json"))["seed"], 12);
}

#[test]
fn timing_fills_the_ms_column_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), "t", "verify", SWEEP, &["--timing"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(!report::read_rows(&r.out.join("verify.csv")).unwrap().is_empty());
}

#[test]
fn zero_samples_give_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "interval", "resolution": 64}, "sweep": {"samples": 0}}"#;
    let r = run(dir.path(), "z", "verify", cfg, &[]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("warning"));
    assert!(report::read_rows(&r.out.join("verify.csv")).unwrap().is_empty());
}

#[test]
fn decay_recovers_the_sharp_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "radial3d", "resolution": 4096, "truncation": 40},
                  "decay": {"q": 1.5, "alpha": 3}}"#;
    let r = run(dir.path(), "d", "decay", cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = Table::read(&r.out.join("decay_fit.csv")).unwrap();
    let slope: f64 = column(&t, "slope", 0).parse().unwrap();
    assert!((slope + 6.0).abs() <= 0.6);
    let discrete: f64 = column(&t, "discrete_manufactured_error", 0).parse().unwrap();
    assert!(discrete <= 10.0 * 1e-10);
    let continuous: f64 = column(&t, "manufactured_error", 0).parse().unwrap();
    assert!(continuous <= 1e-4);
    let profile = Table::read(&r.out.join("decay_profile.csv")).unwrap();
    assert_eq!(profile.header, ["rho", "u", "log_rho", "log_u"]);
    assert_eq!(profile.rows.len(), 4096);
}

#[test]
fn decay_rejects_slow_sources() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "radial3d", "resolution": 256}, "decay": {"alpha": 2.5}}"#;
    let r = run(dir.path(), "d", "decay", cfg, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("decay.alpha"), "{}", r.stderr);
}

#[test]
fn decay_needs_a_radial_domain() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), "d", "decay", r#"{"domain": {"kind": "interval", "resolution": 64}}"#, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("domain.kind"));
}

#[test]
fn config_errors_carry_locations() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), "s", "energy", "{\n  \"domain\": {\"kind\": \"interval\",\n  \"resolution\": 64, \"oops\": 1}\n}", &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    let r = run(dir.path(), "p", "energy", r#"{"domain": {"kind": "box2d", "resolution": [16]}}"#, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("domain.resolution"), "{}", r.stderr);
    let missing = Command::new(env!("CARGO_BIN_EXE_potstab"))
        .args(["energy", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
