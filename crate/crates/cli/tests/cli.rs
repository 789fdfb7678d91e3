//! End-to-end runs of the `ecmarket` binary.

use std::process::{Command, Output};

fn ecmarket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecmarket")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn metric(csv: &str, name: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("no {name} in {csv}"))
        .parse()
        .unwrap()
}

#[test]
fn clear_proposed_auto_balances_simple_system() {
    let out = ecmarket(&["clear", "--case", "simple", "--mechanism", "proposed", "--delta", "auto"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!((metric(&csv, "delta") - 0.9018).abs() < 1e-3);
    assert!(metric(&csv, "subsidy").abs() < 1e-3);
}

#[test]
fn clear_traditional_prints_display_welfare() {
    let out = ecmarket(&["clear", "--case", "simple", "--mechanism", "traditional"]);
    assert!(out.status.success());
    assert!((metric(&stdout(&out), "social_welfare") - 659_790.0).abs() < 1e-6);
}

#[test]
fn missing_case_is_an_input_error() {
    let out = ecmarket(&["clear", "--case", "no/such/file.case"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/file.case"));
}

#[test]
fn inconsistent_flags_are_input_errors() {
    let delta_on_t1 = ecmarket(&["clear", "--case", "simple", "--mechanism", "t1", "--delta", "0.5"]);
    assert_eq!(delta_on_t1.status.code(), Some(1));
    let t2_flag_on_proposed = ecmarket(&["clear", "--case", "simple", "--t2-damping", "0.3"]);
    assert_eq!(t2_flag_on_proposed.status.code(), Some(1));
    let bad_damping = ecmarket(&["clear", "--case", "simple", "--mechanism", "t2", "--t2-damping", "0"]);
    assert_eq!(bad_damping.status.code(), Some(1));
    assert_eq!(ecmarket(&["clear", "--case", "simple", "--delta", "1.5"]).status.code(), Some(1));
    assert_eq!(ecmarket(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn compare_emits_four_rows() {
    let out = ecmarket(&["compare", "--case", "simple"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["Traditional", "T1", "T2", "Proposed"]);
}

#[test]
fn compare_json_mirrors_csv() {
    let out = ecmarket(&["compare", "--case", "simple", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["display_scale"], 1000.0);
}

#[test]
fn delta_sweep_hits_zero_eta_at_092() {
    let out = ecmarket(&["sweep-delta", "--case", "simple", "--step", "0.02"]);
    let csv = stdout(&out);
    let first_zero = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| r[1] == 0.0)
        .unwrap();
    assert_eq!(first_zero[0], 0.92);
}

#[test]
fn sweeps_are_identical_across_worker_counts() {
    let one = ecmarket(&["--jobs", "1", "sweep-capacity", "--case", "mesh5"]);
    let four = ecmarket(&["--jobs", "4", "sweep-capacity", "--case", "mesh5"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn verify_exit_codes() {
    assert_eq!(ecmarket(&["verify", "--case", "simple"]).status.code(), Some(0));
    let t1 = ecmarket(&["verify", "--case", "simple", "--mechanism", "t1"]);
    assert_eq!(t1.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&t1.stderr).contains("budget balance"));
}

#[test]
fn generate_round_trips_through_clear() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.case");
    let path = path.to_str().unwrap();
    let gen = ecmarket(&["generate", "--seed", "3", "--buses", "4", "--name", "g", "-o", path]);
    assert!(gen.status.success());
    let out = ecmarket(&["clear", "--case", path, "--mechanism", "t1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let preset = ecmarket(&["generate", "--preset", "mesh5"]);
    assert_eq!(
        String::from_utf8(preset.stdout).unwrap(),
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/cases/mesh5.case")).unwrap()
    );
}
