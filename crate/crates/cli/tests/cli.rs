use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

fn gplm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gplm")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// Gaussian sample with no functional part; returns the OLS estimate.
fn write_linear_sample(path: &Path, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let x = gplm::simulate::covariate_design(n, 2, &mut rng);
    let y: Vec<f64> = (0..n)
        .map(|i| 0.8 * x[(i, 0)] - 1.2 * x[(i, 1)] + gplm::expfam::standard_normal(&mut rng))
        .collect();
    let mut text = String::from("y,x1,x2\n");
    for i in 0..n {
        text.push_str(&format!("{},{},{}\n", y[i], x[(i, 0)], x[(i, 1)]));
    }
    std::fs::write(path, text).unwrap();
    let qr = DMatrix::from_fn(n, 2, |i, j| x[(i, j)]).qr();
    let rhs = qr.q().transpose() * DVector::from_vec(y);
    qr.r().solve_upper_triangular(&rhs).unwrap().iter().copied().collect()
}

#[test]
fn missing_file_is_an_input_error() {
    let out = gplm(&["fit", "--data", "/nonexistent/sample.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/sample.csv"));
}

#[test]
fn non_dyadic_sample_size_is_rejected() {
    let out = gplm(&["simulate", "--n", "100", "--reps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("power of two"), "{}", stderr(&out));
}

#[test]
fn invalid_options_are_rejected_before_computing() {
    for args in [
        &["simulate", "--reps", "0"][..],
        &["simulate", "--family", "binomial", "--m", "0"],
        &["simulate", "--lambda", "-1"],
        &["simulate", "--penalty", "sobolev", "--sobolev-s", "0.25"],
        &["simulate", "--filter", "coiflet-6"],
        &["calibrate", "--grid", "2,1"],
    ] {
        let out = gplm(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn parse_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "y,x1\n1,2\n3,4\n5,oops\n7,8\n").unwrap();
    let out = gplm(&["fit", "--data", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(":4:2:"), "{}", stderr(&out));
}

#[test]
fn linear_fit_matches_ols() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sample.csv");
    let ols = write_linear_sample(&data, 128);
    let out_dir = dir.path().join("out");
    let out = gplm(&[
        "fit", "--data", data.to_str().unwrap(), "--linear-only", "--lambda", "0",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&out_dir.join("fit.json"));
    let beta = numbers(&report["result"]["beta"]);
    for (a, b) in beta.iter().zip(&ols) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert_eq!(report["config"]["data_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_threshold_interpolates_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sample.csv");
    write_linear_sample(&data, 64);
    let out = gplm(&["fit", "--data", data.to_str().unwrap(), "--lambda", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let beta = numbers(&report["result"]["beta"]);
    let f = numbers(&report["result"]["f_hat"]);
    let text = std::fs::read_to_string(&data).unwrap();
    for (line, fi) in text.lines().skip(1).zip(&f) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let resid = v[0] - beta[0] * v[1] - beta[1] * v[2];
        assert!((resid - fi).abs() < 1e-10, "{resid} vs {fi}");
    }
}

#[test]
fn simulate_writes_reports_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let base = ["simulate", "--n", "64", "--reps", "1", "--seed", "7", "--kappa", "300"];
    for out_dir in [&a, &b] {
        let mut args = base.to_vec();
        args.extend(["--out", out_dir.to_str().unwrap()]);
        assert!(gplm(&args).status.success());
    }
    let config = a.join("report.json");
    let rerun = gplm(&["simulate", "--config", config.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(rerun.status.success(), "{}", stderr(&rerun));
    for name in ["report.json", "replications.csv", "plot.csv"] {
        let first = std::fs::read(a.join(name)).unwrap();
        assert_eq!(first, std::fs::read(b.join(name)).unwrap(), "{name}");
        assert_eq!(first, std::fs::read(c.join(name)).unwrap(), "{name}");
    }
    let plot = std::fs::read_to_string(a.join("plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 65);
    assert!(plot.starts_with("t,f0,f_hat\n"));
}

#[test]
fn single_point_grid_gives_single_point_curve() {
    let out = gplm(&["calibrate", "--n", "64", "--reps", "2", "--kappa", "200", "--grid", "1.25"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let curve = &report["curve"];
    assert_eq!(numbers(&curve["lambdas"]), vec![1.25]);
    assert_eq!(curve["argmin"], 0);
    assert_eq!(curve["lambda_star"], 1.25);
}

#[test]
fn numbers_round_trip_exactly() {
    let out = gplm(&["simulate", "--n", "32", "--reps", "2", "--kappa", "50"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    for r in report["replications"].as_array().unwrap() {
        let beta = r["beta"][0].as_f64().unwrap();
        let rmise = r["rmise"].as_f64().unwrap();
        // shortest representation that parses back to the same double
        assert!(text.contains(&format!("{beta:?}")) && text.contains(&format!("{rmise:?}")));
    }
}
