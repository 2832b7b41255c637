use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn leviform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leviform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn worm_report_formulas() {
    let out = leviform(&["worm-report", "--beta", "2.356194490", "--m", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["version"], "1.0");
    assert_eq!(r["config"]["beta"], 2.35619449);
    let rep = &r["results"][0]["report"];
    assert!((rep["df_formula"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
    assert!((rep["steinness_formula"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!((rep["reciprocal_check"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn riccati_sup_error() {
    let out = leviform(&[
        "riccati",
        "--a",
        "1",
        "--b",
        "1",
        "--phi",
        "1.5707963",
        "--t0",
        "1",
        "--t1",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["results"][0]["sup_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn ball_inner_estimate_is_certified() {
    let out = leviform(&["estimate", "--domain", "ball", "--side", "inner"]);
    assert_eq!(out.status.code(), Some(0));
    let est = &report(&out)["results"][0]["estimate"];
    assert_eq!(est["certified"], true);
    assert!(est["eta"].as_f64().unwrap() >= 0.99);
}

#[test]
fn below_threshold_is_uncertified_not_an_error() {
    let out = leviform(&[
        "criterion",
        "--domain",
        "worm",
        "--beta",
        "1.8849555921538759",
        "--eta2",
        "1.2",
        "--psi",
        "riccati",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["status"], "uncertified");
}

#[test]
fn plain_worm_criterion_is_uncertified() {
    let out = leviform(&[
        "criterion",
        "--domain",
        "worm",
        "--beta",
        "1.8849555921538759",
        "--eta2",
        "2",
        "--m",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let q = report(&out)["results"][0]["max_q"].as_f64().unwrap();
    assert!(q > 0.4, "{q}");
}

#[test]
fn convexify_ellipse() {
    let out = leviform(&["convexify", "--body", "ellipse", "--k", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"][0]["certificate"]["certified"], true);
}

#[test]
fn selftest_passes() {
    let out = leviform(&["selftest", "--m", "5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_and_domain_errors_exit_one() {
    assert_eq!(leviform(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        leviform(&["worm-report", "--beta", "1.0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        leviform(&["convexify", "--body", "disc", "--k", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    std::fs::write(
        &missing,
        r#"{"command": "riccati", "a": 1, "b": 1, "phi": 1.5, "t0": 1}"#,
    )
    .unwrap();
    let out = leviform(&["--config", path_str(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t1"));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"command": "selftest", "m": 3, "sampels": 4}"#).unwrap();
    let out = leviform(&["--config", path_str(&unknown)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sampels"));
}

#[test]
fn config_file_matches_flags_and_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "criterion", "domain": "worm", "beta": 1.8849555921538759,
            "eta2": 2.0, "psi": "riccati", "m": 12}"#,
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out_a = leviform(&["--config", path_str(&cfg), "--csv", path_str(&a)]);
    assert_eq!(out_a.status.code(), Some(0));
    let out_b = Command::new(env!("CARGO_BIN_EXE_leviform"))
        .env("LEVIFORM_THREADS", "2")
        .args([
            "criterion",
            "--domain",
            "worm",
            "--beta",
            "1.8849555921538759",
            "--eta2",
            "2",
            "--psi",
            "riccati",
            "--m",
            "12",
            "--csv",
            path_str(&b),
        ])
        .output()
        .unwrap();
    assert_eq!(out_b.status.code(), Some(0));
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "re_z1,im_z1,re_z2,im_z2,eta2,q,term_ln,term_nll,psi_kind"
    );
    assert_eq!(text.lines().count(), 13);
    // the report embeds the resolved config
    assert_eq!(report(&out_a)["config"], report(&out_b)["config"]);
}

#[test]
fn report_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = leviform(&["selftest", "--m", "3", "--out", path_str(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    for key in ["version", "config", "results", "timing"] {
        assert!(r.get(key).is_some(), "{key}");
    }
}
