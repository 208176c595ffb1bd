//! Acceptance suite: one PASS/FAIL line per criterion on stdout.

use std::io::Write;
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use clap::Parser;
use paving_cli::config::Cli;
use paving_cli::report::{Report, ResultRecord};
use paving_core::ensembles;
use paving_core::equivalence::pave_triangular_via_hermitian;
use paving_core::extension::{extension_bounds, DiagonalState, ExtensionParams};
use paving_core::paving::{certificate_search, paving_constant_exact, paving_search, Method, SearchParams};
use paving_core::rng::child_seed;
use paving_core::HermitianMatrix;
use rayon::prelude::*;

fn run(args: &[&str]) -> Report {
    let cli = Cli::try_parse_from(std::iter::once("paving").chain(args.iter().copied())).expect("arguments parse");
    paving_cli::run(&cli.command).expect("run succeeds").report
}

fn check_value(r: &Report, name: &str) -> f64 {
    r.invariant_checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing check {name}")).value
}

fn verdict(label: &str, ok: bool, detail: String) {
    let line = format!("[{}] {label}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(ok, "{label}: {detail}");
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

#[test]
fn hoffman_inequality() {
    let t = Instant::now();
    let r = run(&["verify", "hoffman", "--trials", "500", "--seed", "1"]);
    let el = t.elapsed();
    let worst = 1.0 - check_value(&r, "hoffman-product-at-least-one");
    let ok = r.all_pass() && worst >= 1.0 - 1e-9 && within(el, 10);
    verdict(
        "hoffman inequality",
        ok,
        format!("500 pairs, n in 2..=8, min product {worst:.6}, {:.2?} (limit 10 s)", el),
    );
}

#[test]
fn logmodular_identity() {
    let t = Instant::now();
    let r = run(&["verify", "cholesky-homomorphism", "--trials", "200", "--seed", "2"]);
    let el = t.elapsed();
    let dev = check_value(&r, "diagonal-homomorphism");
    let ok = r.all_pass() && dev <= 1e-10 && within(el, 5);
    verdict(
        "logmodular identity",
        ok,
        format!("200 P, n <= 16, max deviation {dev:.3e} (tol 1e-10), {:.2?} (limit 5 s)", el),
    );
}

#[test]
fn exact_paving_oracle_family() {
    let params = SearchParams::default();
    let mut worst_exact: f64 = 0.0;
    let mut worst_heur: f64 = 0.0;
    for n in [4usize, 5, 6, 8, 10] {
        let h = HermitianMatrix::ones_minus_identity(n);
        let want = (n.div_ceil(2) - 1) as f64 / (n - 1) as f64;
        let exact = paving_search(&h, 2, Method::Exact, 0, &params).unwrap().epsilon;
        worst_exact = worst_exact.max((exact - want).abs());
        for m in [Method::Greedy, Method::Anneal] {
            let e = paving_search(&h, 2, m, 7, &params).unwrap().epsilon;
            worst_heur = worst_heur.max((e - want).abs());
        }
    }
    let h14 = ensembles::random_zero_diag_hermitian(14, 3);
    let t = Instant::now();
    paving_constant_exact(&h14, 2).unwrap();
    let el = t.elapsed();
    let ok = worst_exact <= 1e-12 && worst_heur <= 1e-9 && within(el, 60);
    verdict(
        "exact paving oracle (J_n - I, r = 2)",
        ok,
        format!("exact error {worst_exact:.1e}, heuristic error {worst_heur:.1e} (tol 1e-9), exact n=14 in {el:.2?} (limit 60 s)"),
    );
}

#[test]
fn extension_duality() {
    let t = Instant::now();
    let swap = HermitianMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let b = extension_bounds(&swap, &DiagonalState::uniform(2).unwrap(), &ExtensionParams::default()).unwrap();
    let oracle = (b.lower + 1.0).abs().max((b.upper - 1.0).abs());
    let r = run(&["verify", "duality", "--trials", "50", "--seed", "4"]);
    let el = t.elapsed();
    let gap = check_value(&r, "duality-gap");
    let order = check_value(&r, "lower-le-upper");
    let ok = oracle <= 1e-6 && r.all_pass() && gap <= 1e-3 && order <= 0.0 && within(el, 60);
    verdict(
        "extension-bounds duality",
        ok,
        format!("swap interval error {oracle:.1e} (tol 1e-6), 50 random: max gap {gap:.2e} (tol 1e-3), max l-u {order:.3}, {el:.2?} (limit 60 s)"),
    );
}

#[test]
fn triangular_reduction() {
    let params = SearchParams::default();
    let t = Instant::now();
    let reports: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let tm = ensembles::random_strict_upper(16, child_seed(5, k));
            pave_triangular_via_hermitian(&tm, 3, Method::Anneal, child_seed(50, k), &params).unwrap()
        })
        .collect();
    let el = t.elapsed();
    let slack =
        reports.iter().flat_map(|r| r.blocks.iter().map(|b| b.measured - b.claimed)).fold(f64::NEG_INFINITY, f64::max);
    let max_blocks = reports.iter().map(|r| r.refined_blocks).max().unwrap();
    let ok = slack <= 1e-12 && max_blocks <= 9 && within(el, 120);
    verdict(
        "triangular reduction (n = 16, r = 3)",
        ok,
        format!("100 T, max measured - claimed {slack:.2e} (tol 1e-12), max refined blocks {max_blocks} (<= 9), {el:.2?} (limit 120 s)"),
    );
}

#[test]
fn fejer_riesz_factorization() {
    let t = Instant::now();
    let r = run(&["verify", "fejer-riesz", "--trials", "50", "--seed", "6"]);
    let el = t.elapsed();
    let rec = check_value(&r, "reconstruction-sup-error");
    let margin = check_value(&r, "roots-outside-closed-disk");
    let sec = check_value(&r, "section-identity");
    let ok = r.all_pass() && rec <= 1e-8 && margin < 0.0 && sec <= 1e-10 && within(el, 30);
    verdict(
        "Fejer-Riesz factorization",
        ok,
        format!("50 symbols, degree <= 8: sup error {rec:.1e} (tol 1e-8), max 1 - |root| {margin:.3}, section {sec:.1e} (tol 1e-10), {el:.2?} (limit 30 s)"),
    );
}

#[test]
fn triviality_and_monotonicity() {
    let params = SearchParams::default();
    let t = Instant::now();
    let mut mono: f64 = f64::NEG_INFINITY;
    let mut at_n: f64 = 0.0;
    for k in 0..20u64 {
        let n = 3 + (k % 8) as usize;
        let h = ensembles::random_zero_diag_hermitian(n, child_seed(7, k));
        let eps: Vec<f64> = (1..=4.min(n)).map(|r| paving_constant_exact(&h, r).unwrap().epsilon).collect();
        for w in eps.windows(2) {
            mono = mono.max(w[1] - w[0]);
        }
        at_n = at_n.max(paving_constant_exact(&h, n).unwrap().epsilon);
    }
    let mut min_product = f64::INFINITY;
    for k in 0..20u64 {
        let n = 2 + (k % 9) as usize;
        let p = ensembles::random_positive_band(n, 0.5, 2.0, child_seed(70, k)).unwrap();
        min_product = min_product.min(certificate_search(&p, n, Method::Exact, 0, &params).unwrap().min_product);
    }
    let el = t.elapsed();
    let ok = mono <= 1e-12 && at_n <= 1e-12 && min_product >= 1.0 - 1e-10 && within(el, 60);
    verdict(
        "triviality and monotonicity",
        ok,
        format!("20 H (n <= 10): max increase {mono:.1e}, eps at r=n {at_n:.1e}; 20 P (n <= 10): singleton min c*d {min_product:.12}, {el:.2?} (limit 60 s)"),
    );
}

fn run_binary(args: &[&str], out: &Path) -> Vec<u8> {
    let status =
        Process::new(env!("CARGO_BIN_EXE_paving")).args(args).arg("--out").arg(out).status().expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
    std::fs::read(out).unwrap()
}

/// Objective values and partitions of a report, without the config echo.
fn numbers(bytes: &[u8]) -> Vec<serde_json::Value> {
    let r = Report::from_json_str(std::str::from_utf8(bytes).unwrap()).unwrap();
    r.results
        .iter()
        .map(|x| match x {
            ResultRecord::Paving { report, .. } => serde_json::json!([report.epsilon, report.partition]),
            ResultRecord::ScanRow(row) => serde_json::json!([row.values, row.partitions]),
            other => serde_json::to_value(other).unwrap(),
        })
        .collect()
}

#[test]
fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let runs: [&[&str]; 3] = [
        &["pave", "--ensemble", "zero-diag-hermitian", "--n", "12", "--r", "2..3", "--trials", "3", "--seed", "9"],
        &[
            "pave",
            "--ensemble",
            "strict-upper",
            "--n",
            "9",
            "--r",
            "3",
            "--method",
            "anneal",
            "--trials",
            "2",
            "--seed",
            "9",
        ],
        &["scan", "--ensemble", "zero-diag-hermitian", "--n", "12", "--r", "1..4", "--trials", "3", "--seed", "9"],
    ];
    let mut identical = true;
    let mut parallel_equal = true;
    for args in runs {
        let single = [args, &["--workers", "1"]].concat();
        let a = run_binary(&single, &out);
        let b = run_binary(&single, &out);
        identical &= a == b;
        let multi = [args, &["--workers", "4"]].concat();
        let c = run_binary(&multi, &out);
        parallel_equal &= numbers(&a) == numbers(&c);
    }
    verdict(
        "determinism",
        identical && parallel_equal,
        format!("byte-identical single-worker reports: {identical}; 4-worker numbers equal: {parallel_equal}"),
    );
}

#[test]
fn sandwich_principal_case() {
    let t = Instant::now();
    let r = run(&["verify", "sandwich", "--trials", "50", "--seed", "8"]);
    let el = t.elapsed();
    let fails = check_value(&r, "singleton-sandwich");
    let ok = r.all_pass() && fails == 0.0 && within(el, 5);
    verdict(
        "sandwich principal case",
        ok,
        format!("50 H, every singleton with t = H_kk, eps = 0, {el:.2?} (limit 5 s)"),
    );
}
