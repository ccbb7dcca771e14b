use std::path::Path;
use std::process::{Command, Output};

use keytrade::binary::{build_source, closed_form};
use keytrade::info::binary_entropy;

fn keytrade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keytrade")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_cascade(dir: &Path) -> String {
    let path = dir.join("cascade.json");
    std::fs::write(&path, build_source(0.3, 0.5).unwrap().to_json()).unwrap();
    path.display().to_string()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').take(3).map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn binary_example_rows() {
    let o = keytrade(&["binary-example", "--p", "0.5", "--q", "0.5", "--alphas", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "alpha,R,L,E\n0,0.5,0.75,0.25\n");

    let o = keytrade(&["binary-example", "--p", "1", "--q", "0.4", "--alphas", "0,0.2,0.5"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn binary_example_rejects_out_of_range() {
    assert_eq!(keytrade(&["binary-example", "--p", "0.5", "--q", "0.5", "--alphas", "0.6"]).status.code(), Some(2));
    assert_eq!(keytrade(&["binary-example", "--p", "1.5", "--q", "0.5"]).status.code(), Some(2));
}

#[test]
fn region_sweep_follows_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_cascade(dir.path());
    let alphas = [0.0, 0.2, 0.4];
    let caps: Vec<String> = alphas
        .iter()
        .map(|&a| format!("{}", 0.3 * (1.0 - binary_entropy(a).unwrap())))
        .collect();
    let out = dir.path().join("region.csv");
    let o = keytrade(&[
        "region",
        "--source",
        &src,
        "--values",
        &caps.join(","),
        "--restarts",
        "16",
        "--u-size",
        "2",
        "--v-size",
        "4",
        "--out",
        &out.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("R,L,E,restart_id,seed\n"));
    for (&a, row) in alphas.iter().zip(rows(&text)) {
        let want = closed_form(0.3, 0.5, a).unwrap();
        assert!((row[2] - want.exponent).abs() < 1e-3, "{a}: {row:?}");
    }
    assert!(Path::new(&format!("{}.manifest.json", out.display())).exists());
}

#[test]
fn region_single_point_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_cascade(dir.path());
    let o = keytrade(&["region", "--source", &src, "--values", "0.05", "--restarts", "2"]);
    assert_eq!(stdout(&o).lines().count(), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"axes\": [").unwrap();
    let o = keytrade(&["region", "--source", &bad.display().to_string(), "--values", "0.1"]);
    assert_eq!(o.status.code(), Some(2));

    // I(X;Z) = 0.35 for this source
    let o = keytrade(&["region", "--source", &src, "--values", "0.1", "--leakage-cap", "0.2", "--restarts", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_modes() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_cascade(dir.path());
    let o = keytrade(&["simulate", "--source", &src, "--aux", "bsc:0.2", "--n", "3", "--exact"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mode"], "exact");
    assert!(v["metrics"]["mfap"].is_number() && v["metrics"]["src_leak"].is_number());

    let o = keytrade(&["simulate", "--source", &src, "--aux", "bsc:0.2", "--n", "14", "--trials", "300"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mode"], "monte_carlo");
    assert!(v["metrics"]["src_leak"].is_null() && v["metrics"]["key_leak"].is_null());

    let o = keytrade(&["simulate", "--source", &src, "--aux", "bsc:0.2", "--n", "14", "--exact"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_cascade(dir.path());
    let args = ["simulate", "--source", &src, "--aux", "identity", "--n", "6", "--trials", "2000", "--seed", "9"];
    assert_eq!(keytrade(&args).stdout, keytrade(&args).stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_cascade(dir.path());
    let args = ["simulate", "--source", &src, "--aux", "bsc:0.1", "--n", "10", "--trials", "9000"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_keytrade"))
            .args(args)
            .env("KEYTRADE_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn validate_source_reports_degradedness() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_cascade(dir.path());
    let o = keytrade(&["validate-source", "--source", &src]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degraded"], true);

    let neg = dir.path().join("neg.json");
    std::fs::write(
        &neg,
        r#"{"axes":[{"name":"x","size":2},{"name":"y","size":1},{"name":"z","size":1}],"mass":[1.2,-0.2]}"#,
    )
    .unwrap();
    assert_eq!(keytrade(&["validate-source", "--source", &neg.display().to_string()]).status.code(), Some(2));
}
