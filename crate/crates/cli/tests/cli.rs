use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn f2bp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_f2bp")).args(args).output().expect("binary runs")
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn summary_value(stdout: &[u8], key: &str) -> String {
    let text = String::from_utf8_lossy(stdout);
    let table: toml::Table = text.parse().expect("summary is TOML");
    table[key].to_string()
}

#[test]
fn scenario_run_prints_summary_and_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("states.csv");
    let diag = dir.path().join("diag.csv");
    let out = f2bp(&[
        "--scenario", "2", "--tf", "5", "--h", "1",
        "--out-states", states.to_str().unwrap(),
        "--out-diag", diag.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_value(&out.stdout, "steps"), "5");
    assert_eq!(summary_value(&out.stdout, "evaluations"), "6");
    assert_eq!(fs::read_to_string(&states).unwrap().lines().count(), 7);
    assert_eq!(fs::read_to_string(&diag).unwrap().lines().count(), 7);
}

#[test]
fn rkf_via_flags() {
    let out = f2bp(&["--scenario", "2", "--integrator", "rkf78", "--tol", "1e-9", "--tf", "3", "--order", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_value(&out.stdout, "integrator"), "\"rkf78\"");
    assert_eq!(summary_value(&out.stdout, "order"), "2");
}

#[test]
fn conflicting_flags_fail() {
    assert!(!f2bp(&["--scenario", "2", "--integrator", "rkf78", "--h", "1"]).status.success());
    assert!(!f2bp(&["--scenario", "2", "--tol", "1e-8"]).status.success());
    assert!(!f2bp(&["--scenario", "9"]).status.success());
    assert!(!f2bp(&["--tf", "5"]).status.success());
    assert!(!f2bp(&["--scenario", "2", "--deterministic", "maybe"]).status.success());
}

#[test]
fn config_files_with_body_files() {
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("s.csv");
    for n in 1..=4 {
        let cfg = scenarios_dir().join(format!("scenario{n}.toml"));
        let out = f2bp(&[
            "--config", cfg.to_str().unwrap(), "--tf", "2",
            "--out-states", states.to_str().unwrap(),
            "--out-diag", dir.path().join("d.csv").to_str().unwrap(),
            "--summary", dir.path().join("sum.toml").to_str().unwrap(),
        ]);
        assert!(out.status.success(), "scenario {n}: {}", String::from_utf8_lossy(&out.stderr));
        let builtin = f2bp(&["--scenario", &n.to_string(), "--tf", "2"]);
        // Same bodies and initial state whether loaded from files or built in.
        let a: toml::Table = String::from_utf8_lossy(&out.stdout).parse().unwrap();
        let b: toml::Table = String::from_utf8_lossy(&builtin.stdout).parse().unwrap();
        for key in ["mean_abs_energy_error", "steps", "termination"] {
            assert_eq!(a[key], b[key], "scenario {n} {key}");
        }
    }
}

#[test]
fn deterministic_switch_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let run = |extra: &[&str], states: &str| {
        let mut args = vec!["--scenario", "2", "--out-states", states];
        args.extend_from_slice(extra);
        let out = f2bp(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let (a, b, c, d) = (p("a.csv"), p("b.csv"), p("c.csv"), p("d.csv"));
    run(&["--tf", "8", "--deterministic", "on"], &a);
    run(&["--tf", "8", "--deterministic", "on"], &b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    run(&["--tf", "8", "--deterministic", "off"], &c);

    run(&["--tf", "4"], &d);
    let resumed = p("e.csv");
    run(&["--tf", "8", "--resume", &d], &resumed);
    let last = |path: &str| fs::read_to_string(path).unwrap().lines().last().unwrap().to_string();
    let full: Vec<f64> = last(&a).split(',').map(|v| v.parse().unwrap()).collect();
    let cont: Vec<f64> = last(&resumed).split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(full[0], cont[0]);
    for (x, y) in full.iter().zip(&cont) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-6), "{x} vs {y}");
    }
}

#[test]
fn print_config_round_trips() {
    let out = f2bp(&["--scenario", "3", "--order", "3", "--print-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("order = 3"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    fs::write(&path, &text).unwrap();
    let again = f2bp(&["--config", path.to_str().unwrap(), "--print-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
