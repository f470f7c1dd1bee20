//! End-to-end tests of the binary: output shapes, determinism, exit
//! codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strobe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn beta_known_values() {
    let out = run(&["beta", "--word", "0"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("(0),1,0"), "{}", stdout(&out));

    let out = run(&["beta", "--word", "3"]);
    assert!(stdout(&out).contains("(3),0,0"));

    let out = run(&["beta", "--word", "1,-1"]);
    assert!(stdout(&out).contains("(1,-1),0,-1"));

    let out = run(&["beta", "--word", "2,-2"]);
    assert!(stdout(&out).contains("(2,-2),0,-1/2"));
}

#[test]
fn bad_word_is_config_error() {
    let out = run(&["beta", "--word", "1,x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_problem_is_config_error() {
    let out = run(&["modes", "--problem", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cost_guard_exit_code() {
    let out = run(&[
        "convergence",
        "--problem",
        "vlasov_const_b_2d",
        "--eps",
        "1e-6,1e-7,1e-8",
        "--points",
        "1",
        "--t-final",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn modes_dump_shape() {
    let out = run(&["modes", "--problem", "const_eb_2d", "--points", "2", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["tool"], "strobe");
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["modes"]["1"]["re"].as_array().unwrap().len() == 4);
    // constant-field problem: zero mode vanishes
    let m0: Vec<f64> = rows[0]["modes"]["0"]["re"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(m0.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn avg_fields_dump_shape() {
    let out = run(&[
        "avg-fields",
        "--problem",
        "vlasov_const_b_2d",
        "--order",
        "1",
        "--eps",
        "1e-2",
        "--points",
        "2",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let pts = v["result"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[0]["k_terms"].as_array().unwrap().len(), 2);
    assert_eq!(pts[0]["k_eps"].as_array().unwrap().len(), 4);
}

#[test]
fn convergence_reports_exact_on_terminating_expansion() {
    let out = run(&[
        "convergence",
        "--problem",
        "const_eb_2d",
        "--order",
        "2",
        "--eps",
        "1e-1,1e-2,1e-3",
        "--points",
        "3",
        "--seed",
        "5",
        "--t-final",
        "1.0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("# fitted_slope,exact"), "{text}");
    assert!(text.contains("# comparison,exact solution"));
}

#[test]
fn defect_sweep_shows_second_order() {
    let out = run(&[
        "defect",
        "--problem",
        "vlasov_varying_b_2d",
        "--order",
        "1",
        "--eps",
        "1e-1,1e-2,1e-3",
        "--points",
        "4",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let slope: f64 = v["result"]["bracket_slope"].as_str().unwrap().parse().unwrap();
    assert!((slope - 2.0).abs() < 0.4, "bracket slope {slope}");
}

#[test]
fn reconstruct_rejects_constant_frequency() {
    let out = run(&["reconstruct", "--problem", "const_eb_2d", "--points", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_config_and_seed_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a: PathBuf = dir.path().join("a.csv");
    let b: PathBuf = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "4")] {
        let out = run(&[
            "convergence",
            "--problem",
            "const_eb_2d",
            "--order",
            "1",
            "--eps",
            "1e-1,1e-2,1e-3",
            "--points",
            "4",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ba = std::fs::read(&a).unwrap();
    let bb = std::fs::read(&b).unwrap();
    assert_eq!(ba, bb, "outputs differ across worker counts");
}

#[test]
fn config_file_roundtrip_with_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.conf");
    std::fs::write(
        &conf,
        "problem = vlasov_varying_b_2d\n\
         order = 1\n\
         eps = 1e-1, 1e-2, 1e-3\n\
         points = 3\n\
         seed = 9\n\
         b = 2 + sin(x1)*cos(x2)\n\
         U = 0.5*(x1^2 + x2^2)\n",
    )
    .unwrap();
    let out = run(&["defect", "--config", conf.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["b"], "2 + sin(x1)*cos(x2)");

    // unknown key rejected
    std::fs::write(&conf, "problem = const_eb_2d\nwat = 1\n").unwrap();
    let out = run(&["modes", "--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_dump_agrees() {
    let out = run(&[
        "oracle",
        "--problem",
        "vlasov_const_b_2d",
        "--order",
        "1",
        "--points",
        "1",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for term in v["result"][0]["terms"].as_array().unwrap() {
        assert!(term["max_diff"].as_f64().unwrap() < 1e-8);
    }
}
