use std::path::Path;
use std::process::{Command, Output};

fn bmedian(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmedian"))
        .args(args)
        .env_remove("BMEDIAN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn kernel_eval_prints_scalar() {
    let o = bmedian(&["kernel-eval", "--op", "limit-covariance", "--s", "1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1.5707963267948966");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bmedian(&["kernel-eval", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(bmedian(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(bmedian(&[]).status.code(), Some(2));
}

#[test]
fn invalid_values_fail() {
    let o = bmedian(&["kernel-eval", "--op", "limit-covariance", "--s", "-1", "--t", "1"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(!o.stderr.is_empty());
}

fn simulate_csv(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let out = dir.join(name);
    let o = bmedian(&[
        "--threads",
        threads,
        "simulate",
        "--kind",
        "paths",
        "--n",
        "101",
        "--grid",
        "0.5,1,2",
        "--reps",
        "50",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn simulate_output_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_csv(dir.path(), "a.csv", "1");
    let b = simulate_csv(dir.path(), "b.csv", "4");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,n,reps,rep,t,x"));
    assert_eq!(lines.count(), 50 * 3);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[kernel-eval]\nop = \"limit-covariance\"\ns = 1.0\nt = 2.0\n").unwrap();
    let c = cfg.to_str().unwrap();

    let o = bmedian(&["--config", c, "kernel-eval"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.110_720_734_539_591_5).abs() < 1e-15);

    let o = bmedian(&["--config", c, "kernel-eval", "--t", "1"]);
    assert_eq!(stdout(&o).trim(), "1.5707963267948966");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[kernel-eval]\nop = \"psi\"\nwobble = 3\n").unwrap();
    let o = bmedian(&["--config", cfg.to_str().unwrap(), "kernel-eval"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn walk_phi_is_a_probability() {
    let o = bmedian(&["walk", "--op", "phi", "--pt1", "0.3", "--pt2", "0.2", "--k", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["command"], "walk");
    let v = doc["results"].as_f64().unwrap();
    assert!(v > 0.0 && v < 0.5);
}

#[test]
fn verify_writes_report_that_report_reads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp.json");
    let o = bmedian(&["verify", "--suite", "expansion", "--alpha", "0.1", "--beta", "0.05", "--delta", "1e-4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bmedian(&["report", "--input", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
}
