//! End-to-end runs of the `sumrule` binary.

use std::process::{Command, Output};

const HEADER: &str = "kappa,s,route,value,order0,order1,order2,tail_estimate,n_max,basis_size";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumrule"))
        .args(args)
        .env("SUMRULE_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn sumrule_csv_has_fixed_schema() {
    let out = run(&["--format", "csv", "sumrule", "--s", "1.5", "--kappa", "0.1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let row: Vec<&str> = lines.next().expect("one record").split(',').collect();
    assert_eq!(row.len(), 10);
    assert_eq!(row[2], "perturbative");
    let value: f64 = row[3].parse().unwrap();
    assert!((value - 0.0387338).abs() < 1e-6);
    // 17 significant digits in scientific notation
    let mantissa = row[3].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
}

#[test]
fn json_lines_are_deterministic() {
    let args = ["sumrule", "--s", "1.5", "--kappa", "0.2"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn exact_route_gives_order_one_rule() {
    let out = run(&["sumrule", "--s", "1", "--kappa", "0.5", "--route", "exact"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let record: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let value = record["value"].as_f64().unwrap();
    assert!((value - (1.0 / 6.0 - 0.25 / 120.0)).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(
        run(&["sumrule", "--s", "1.5", "--kappa", "2.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["sumrule", "--s", "1.9", "--kappa", "0.1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn quick_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checks.csv");
    let out = run(&[
        "--format",
        "csv",
        "-o",
        path.to_str().unwrap(),
        "verify",
        "--quick",
        "--kappa",
        "0.2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.lines().count() > 10);
}
