//! Integration tests for the `ruintime` binary: exit-code contract, output
//! shapes, and byte-level reproducibility.

use std::process::{Command, Output};

fn ruintime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruintime"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn usage_error_exits_2_with_message_on_stderr() {
    let out = ruintime(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));

    let out = ruintime(&["density", "--family", "gamma", "--shape", "2", "--rate", "2"]);
    assert_eq!(out.status.code(), Some(2), "missing --t-max/--dt is a usage error");
}

#[test]
fn numeric_failure_exits_3() {
    // The per-panel error estimate has a floor of ~50 eps int|f|, so a
    // 1e-15 tolerance is unreachable no matter how far refinement goes.
    let out = ruintime(&[
        "prob", "--family", "gamma", "--shape", "2", "--rate", "2", "--t", "20", "--quad-tol",
        "1e-15",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance"));
}

#[test]
fn table1_default_run_passes_check() {
    let out = ruintime(&["table1", "--check"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,psi_u0,psi_e_u0,psi_u10,psi_e_u10,psi_u20,psi_e_u20"
    );
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    // Spot value: psi(10, 100) = 0.1842.
    let row100 = text.lines().find(|l| l.starts_with("100,")).unwrap();
    let psi_10_100: f64 = row100.split(',').nth(3).unwrap().parse().unwrap();
    assert!((psi_10_100 - 0.1842).abs() < 5e-5);
}

#[test]
fn simulate_same_seed_single_thread_is_byte_identical() {
    let args = [
        "simulate",
        "--family",
        "gamma",
        "--shape",
        "2",
        "--rate",
        "2",
        "--u",
        "5",
        "--paths",
        "50000",
        "--horizon",
        "20",
        "--seed",
        "42",
        "--threads",
        "1",
    ];
    let a = ruintime(&args);
    let b = ruintime(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "same seed, same thread count: identical bytes");

    // And CSV output as well.
    let mut csv_args = args.to_vec();
    csv_args.extend_from_slice(&["--out", "csv"]);
    let a = ruintime(&csv_args);
    let b = ruintime(&csv_args);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("bin_start,bin_end,count"));
}

#[test]
fn density_csv_is_newline_terminated_with_header() {
    let out = ruintime(&[
        "density", "--family", "gamma", "--shape", "2", "--rate", "2", "--t-max", "2", "--dt",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.ends_with('\n'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,density");
    assert_eq!(lines.len(), 5, "header + 4 grid rows");
    assert!(lines[1].starts_with("0.5,"));
}

#[test]
fn verify_suite_passes_end_to_end() {
    let out = ruintime(&["verify"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "verify output:\n{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",PASS,")), "all checks pass:\n{text}");
}

#[test]
fn simulate_frequency_agrees_with_prob() {
    let sim_out = ruintime(&[
        "simulate", "--family", "gamma", "--shape", "2", "--rate", "2", "--paths", "200000",
        "--horizon", "20", "--seed", "5150",
    ]);
    assert_eq!(sim_out.status.code(), Some(0));
    let sim: serde_json::Value = serde_json::from_slice(&sim_out.stdout).unwrap();
    let ruined = sim["results"]["ruined"].as_u64().unwrap() as f64;
    let n = sim["results"]["n_paths"].as_u64().unwrap() as f64;

    let prob_out = ruintime(&[
        "prob", "--family", "gamma", "--shape", "2", "--rate", "2", "--t", "20",
    ]);
    let prob: serde_json::Value = serde_json::from_slice(&prob_out.stdout).unwrap();
    let analytic = prob["results"]["value"].as_f64().unwrap();

    let se = (analytic * (1.0 - analytic) / n).sqrt();
    assert!(
        (ruined / n - analytic).abs() <= 3.0 * se,
        "simulate {} vs prob {analytic} outside 3 sigma",
        ruined / n
    );
}

#[test]
fn json_records_echo_parameters() {
    let out = ruintime(&[
        "prob", "--u", "3", "--family", "gamma", "--shape", "2", "--rate", "2", "--t", "10",
        "--out", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "prob");
    assert_eq!(v["parameters"]["u"], "3");
    assert_eq!(v["parameters"]["t"], "10");
    assert!(v["results"]["value"].as_f64().unwrap() > 0.0);
}
