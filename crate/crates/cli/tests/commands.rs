use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use paving_cli::config::Cli;
use paving_cli::report::{Report, ResultRecord};

fn run(args: &[&str]) -> paving_cli::RunOutput {
    let cli = Cli::try_parse_from(std::iter::once("paving").chain(args.iter().copied())).unwrap();
    paving_cli::run(&cli.command).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn binary(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_paving")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn epsilons(r: &Report) -> Vec<f64> {
    r.results
        .iter()
        .filter_map(|x| match x {
            ResultRecord::Paving { report, .. } => Some(report.epsilon),
            _ => None,
        })
        .collect()
}

#[test]
fn pave_ones_minus_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "j4.json", r#"{"n":4,"real":[[0,1,1,1],[1,0,1,1],[1,1,0,1],[1,1,1,0]]}"#);
    let out = run(&["pave", "--input", m.to_str().unwrap(), "--r", "2", "--method", "exact"]);
    assert!(out.report.all_pass());
    assert!((epsilons(&out.report)[0] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn pave_zero_matrix_and_singletons() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "z.json", r#"{"n":3,"real":[[0,0,0],[0,0,0],[0,0,0]]}"#);
    let out = run(&["pave", "--input", m.to_str().unwrap(), "--r", "1..3"]);
    assert!(out.report.all_pass());
    assert!(epsilons(&out.report).iter().all(|&e| e == 0.0));

    let out = run(&["pave", "--ensemble", "zero-diag-hermitian", "--n", "7", "--r", "7", "--trials", "3"]);
    assert!(out.report.all_pass());
    assert!(epsilons(&out.report).iter().all(|&e| e.abs() < 1e-12));
    assert!(out.report.invariant_checks.iter().any(|c| c.name == "singleton-triviality"));
}

#[test]
fn scan_is_monotone_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run(&["scan", "--ensemble", "zero-diag-hermitian", "--n", "16", "--r", "1..4", "--trials", "5", "--seed", "3"]);
    assert!(out.report.all_pass());
    let rows: Vec<_> = out
        .report
        .results
        .iter()
        .filter_map(|x| match x {
            ResultRecord::ScanRow(r) => Some(r.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(rows.len(), 4);
    for t in 0..5 {
        for w in rows.windows(2) {
            assert!(w[1].values[t] <= w[0].values[t] + 1e-12);
        }
    }
    let csv = out.csv.clone().unwrap();
    assert_eq!(csv.lines().count(), 5);

    let path = dir.path().join("scan.json");
    let (code, _, _) = binary(&[
        "scan",
        "--ensemble",
        "zero-diag-hermitian",
        "--n",
        "6",
        "--r",
        "1..2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(dir.path().join("scan.csv").exists());
}

#[test]
fn scan_certificate_singletons() {
    let out = run(&[
        "scan",
        "--ensemble",
        "positive-band",
        "--n",
        "6",
        "--r",
        "6",
        "--objective",
        "certificate",
        "--trials",
        "4",
    ]);
    assert!(out.report.all_pass());
    let ResultRecord::ScanRow(row) = &out.report.results[0] else { panic!("expected a scan row") };
    // certificate-ε is 1 − min_product
    assert!(row.max <= 1e-10);
}

#[test]
fn scan_without_trials_is_empty() {
    let (code, stdout, _) = binary(&["scan", "--ensemble", "zero-diag-hermitian", "--n", "5", "--trials", "0"]);
    assert_eq!(code, 0);
    let r = Report::from_json_str(&stdout).unwrap();
    assert!(r.results.is_empty());
}

#[test]
fn verify_suites_pass() {
    for (suite, trials) in
        [("hoffman", "500"), ("cholesky-homomorphism", "200"), ("sandwich", "20"), ("refinement", "30")]
    {
        let out = run(&["verify", suite, "--trials", trials]);
        assert!(out.report.all_pass(), "{suite}");
        let ResultRecord::Suite { failures, .. } = &out.report.results[0] else { panic!("expected a suite record") };
        assert_eq!(*failures, 0);
    }
}

#[test]
fn extend_swap_interval() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "swap.json", r#"{"n":2,"real":[[0,1],[1,0]]}"#);
    let out = run(&["extend", "--input", m.to_str().unwrap()]);
    assert!(out.report.all_pass());
    let ResultRecord::Extension { bounds, .. } = &out.report.results[0] else { panic!("expected extension bounds") };
    assert!((bounds.lower + 1.0).abs() < 1e-6 && (bounds.upper - 1.0).abs() < 1e-6);

    let w = write(dir.path(), "w.json", r#"{"w":[1.0,0.0]}"#);
    let out = run(&["extend", "--input", m.to_str().unwrap(), "--weights", w.to_str().unwrap()]);
    let ResultRecord::Extension { bounds, .. } = &out.report.results[0] else { panic!("expected extension bounds") };
    assert!(bounds.lower.abs() < 1e-6 && bounds.upper.abs() < 1e-6);
}

#[test]
fn factor_fejer_riesz_example() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", r#"{"m":1,"coeffs":[[1,0],[2.5,0],[1,0]]}"#);
    let out = run(&["factor", "fejer-riesz", "--input", p.to_str().unwrap()]);
    assert!(out.report.all_pass());
    let ResultRecord::FejerRiesz { factor, .. } = &out.report.results[0] else { panic!("expected a factor") };
    assert!((factor.coeffs[1][0] - 2f64.sqrt()).abs() < 1e-10);
    assert!((factor.coeffs[2][0] - 0.5f64.sqrt()).abs() < 1e-10);
}

#[test]
fn factor_cholesky_ensemble() {
    let out = run(&["factor", "cholesky", "--n", "9", "--trials", "4"]);
    assert!(out.report.all_pass());
    assert_eq!(out.report.results.len(), 4);
}

#[test]
fn toeplitz_shift_parity() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", r#"{"m":1,"coeffs":[[0,0],[0,0],[1,0]]}"#);
    let out = run(&["toeplitz", "--input", f.to_str().unwrap(), "--n", "4", "--r", "2", "--method", "exact"]);
    assert!(out.report.all_pass());
    let ResultRecord::Reduction { report, .. } = &out.report.results[0] else { panic!("expected a reduction") };
    assert_eq!(report.ratio, 0.0);
    assert_eq!(report.refined.blocks(), vec![vec![0, 2], vec![1, 3]]);
}

#[test]
fn toeplitz_rejects_nonzero_mean() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", r#"{"m":1,"coeffs":[[0,0],[1,0],[1,0]]}"#);
    let (code, _, err) = binary(&["toeplitz", "--input", f.to_str().unwrap(), "--n", "4"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn errors_exit_with_two_and_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"n\":2,\n\"real\":[[0,1],[1,0]],}");
    let (code, _, err) = binary(&["pave", "--input", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");

    let (code, _, err) =
        binary(&["pave", "--ensemble", "zero-diag-hermitian", "--n", "30", "--r", "3", "--method", "exact"]);
    assert_eq!(code, 2);
    assert!(err.contains("12"), "{err}");

    let (code, _, _) = binary(&["verify", "unknown-suite"]);
    assert_eq!(code, 2);
    let (code, _, _) = binary(&["pave", "--r", "0", "--ensemble", "zero-diag-hermitian", "--n", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn failing_check_exits_with_one() {
    let (code, stdout, _) = binary(&["verify", "hoffman", "--trials", "5", "--tol=-1"]);
    assert_eq!(code, 1);
    let r = Report::from_json_str(&stdout).unwrap();
    assert!(!r.all_pass());
}

#[test]
fn reports_round_trip_and_reject_unknown_fields() {
    let (_, stdout, _) = binary(&["pave", "--ensemble", "zero-diag-hermitian", "--n", "6", "--r", "2"]);
    let r = Report::from_json_str(&stdout).unwrap();
    assert_eq!(r.schema_version, 1);
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", stdout);
    let mut v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(Report::from_json_str(&v.to_string()).is_err());
    assert!(r.timing.is_none());
}
