mod common;

use std::path::Path;
use std::process::{Command, Output};

use hidim::{read_report, save_matrix, MatrixFormat};

fn hidim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hidim")).args(args).output().expect("binary runs")
}

fn scan_file(dir: &Path) -> String {
    let mut values = common::gaussian(40, 120, &mut common::rng(1));
    values.row_mut(5).scale_mut(10.0);
    let path = dir.join("scan.bin");
    save_matrix(&values, &path, MatrixFormat::FlatBinary).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn detect_writes_reports_and_prints_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = scan_file(dir.path());
    let out = dir.path().join("report.json");
    let run = hidim(&["detect", "--in", &input, "--out", out.to_str().unwrap(), "--alpha", "3", "--gamma", "0.001"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("leverage:")));
    let distance = stdout.lines().find(|l| l.starts_with("distance:")).unwrap();
    assert!(distance.split_whitespace().any(|w| w == "5"), "{stdout}");

    let report = read_report(&out).unwrap();
    assert_eq!(report.t, 40);
    assert_eq!(report.config_echo.alpha, 3.0);
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn detect_reports_input_errors_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = scan_file(dir.path());
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();

    let missing = hidim(&["detect", "--in", "/no/such/scan.bin", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    let alpha = hidim(&["detect", "--in", &input, "--out", out, "--alpha", "0.5"]);
    assert_eq!(alpha.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&alpha.stderr).contains("alpha"));

    assert_eq!(hidim(&["detect", "--in", &input, "--out", out, "--bogus"]).status.code(), Some(2));
    assert_eq!(hidim(&[]).status.code(), Some(2));
}

#[test]
fn detect_accepts_method_selection() {
    let dir = tempfile::tempdir().unwrap();
    let input = scan_file(dir.path());
    let out = dir.path().join("lev.json");
    let run = hidim(&["detect", "--in", &input, "--out", out.to_str().unwrap(), "--methods", "leverage"]);
    assert_eq!(run.status.code(), Some(0));
    assert!(!String::from_utf8(run.stdout).unwrap().contains("distance:"));
    assert!(read_report(&out).unwrap().distance.is_none());
}

fn simulate_into(dir: &Path) -> (String, String) {
    let run = hidim(&[
        "simulate", "--iterations", "3", "--seed", "7", "--setups", "1", "--artifacts", "none",
        "--snr-grid", "0.5", "--scans", "30", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    (
        std::fs::read_to_string(dir.join("summary.csv")).unwrap(),
        std::fs::read_to_string(dir.join("summary.json")).unwrap(),
    )
}

#[test]
fn simulate_is_reproducible_and_marks_missing_sensitivity() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = simulate_into(a.path());
    assert_eq!(first, simulate_into(b.path()));

    let csv = first.0;
    assert!(csv.starts_with("method,setup,artifact,scan_T,lambda,metric,mean,ci_lo,ci_hi\n"));
    for line in csv.lines().skip(1) {
        if line.contains(",sensitivity,") {
            assert!(line.ends_with(",NA,NA,NA"), "{line}");
        } else {
            assert!(!line.contains("NA"), "{line}");
        }
    }
    assert!(first.1.contains("\"seed\": 7"));
}

#[test]
fn calibrate_prints_both_estimates() {
    let run = hidim(&["calibrate", "--n", "40", "--p", "3", "--replicates", "40", "--starts", "10"]);
    assert_eq!(run.status.code(), Some(0));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("closed-form") && stdout.contains("simulation"));

    let full = hidim(&["calibrate", "--n", "40", "--p", "3", "--h", "40"]);
    let stdout = String::from_utf8(full.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("closed-form") && l.contains("1.000000")));

    assert_eq!(hidim(&["calibrate", "--n", "10", "--p", "10"]).status.code(), Some(2));
    assert_eq!(hidim(&["calibrate", "--n", "10", "--p", "12"]).status.code(), Some(2));
}
