use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noma-beams"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const MINIMAL: &str = r#"
n_antennas = 2
m_beams = 2
snr_db = [20.0]
r_p_bpcu = 0.1
r_s_bpcu = 1.0
trials = 50
seed = 11
schemes = ["selection", "scheme2"]
metric = "ergodic_rate"
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn sweep_writes_header_and_one_row_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out.csv");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let rows = body(&csv);
    assert_eq!(rows[0], "snr_db,n,m,scheme,metric,value,std_err,trials,seed,resamples");
    assert_eq!(rows.len(), 3);
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let a = run(&["sweep", "--config", &cfg, "--out", "-", "--workers", "1"]);
    let b = run(&["sweep", "--config", &cfg, "--out", "-", "--workers", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn n_below_m_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &MINIMAL.replace("n_antennas = 2", "n_antennas = 1"));
    let o = run(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N >= M"));
}

#[test]
fn unknown_field_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{MINIMAL}colour = \"red\"\n"));
    let o = run(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains("line"), "{err}");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = run(&["sweep", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let o = run(&["sweep", "--config", &cfg, "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn preset_smoke_run() {
    let o = run(&["preset", "fig1a", "--trials", "10", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# assumption:")));
    // 9 SNR points for each of M = 2 and M = 4
    assert_eq!(body(&csv).len(), 1 + 18);
    for row in &body(&csv)[1..] {
        let value: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&value));
    }
}

#[test]
fn preset_overrides_and_summary() {
    let o = run(&[
        "preset", "fig2b", "--trials", "20", "--snr-db", "10:20:10", "--strategy", "prefixes", "--summary",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(body(&csv).len(), 1 + 4);
    assert!(csv.contains("strategy=prefixes "));
    assert!(String::from_utf8_lossy(&o.stderr).contains("std_err"));
}

#[test]
fn bad_preset_and_flags_exit_2() {
    assert_eq!(run(&["preset", "fig9"]).status.code(), Some(2));
    assert_eq!(run(&["preset", "fig1a", "--snr-db", "0:10"]).status.code(), Some(2));
    assert_eq!(run(&["preset", "fig1a", "--strategy", "greedy"]).status.code(), Some(2));
    assert_eq!(run(&["preset", "fig1a", "--metric", "goodput"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["validate", "speed"]).status.code(), Some(2));
}

#[test]
fn validate_zf_passes() {
    let o = run(&["validate", "zf"]);
    assert!(o.status.success());
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("PASS") && !report.contains("FAIL"));
}

#[test]
fn validate_solver_is_deterministic() {
    let a = run(&["validate", "solver", "--seed", "7"]);
    let b = run(&["validate", "solver", "--seed", "7"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
}
