use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use paving_core::ensembles::{self, Ensemble, EnsembleKind, Instance, TrigSymbol};
use paving_core::equivalence;
use paving_core::extension::{self, DiagonalState, ExtensionParams};
use paving_core::linalg::{self, CMatrix, HermitianMatrix, UpperTriangularMatrix};
use paving_core::paving::{self, Method, SearchParams};
use paving_core::rng::child_seed;
use rayon::prelude::*;

use crate::config::{Common, ObjectiveArg};
use crate::report::{Checks, ResultRecord, ScanRow};

/// Results plus checks produced by a command.
pub type Outcome = (Vec<ResultRecord>, Checks);

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses JSON with the file name in the diagnostic; serde reports the line
/// and column.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_matrix(path: &Path) -> Result<CMatrix> {
    let file: linalg::MatrixFile = parse_json(path)?;
    file.into_matrix().with_context(|| format!("matrix in {}", path.display()))
}

/// A matrix file is read as Hermitian when it is, else as strictly upper
/// triangular.
fn load_instance(path: &Path) -> Result<Instance> {
    let m = load_matrix(path)?;
    match HermitianMatrix::new(m.clone()) {
        Ok(h) => Ok(Instance::Hermitian(h)),
        Err(herm_err) => match UpperTriangularMatrix::new(m) {
            Ok(t) if t.is_strict() => Ok(Instance::Upper(t)),
            _ => Err(anyhow!("{}: {herm_err}; not strictly upper triangular either", path.display())),
        },
    }
}

fn ensemble(c: &Common, default: Option<EnsembleKind>) -> Result<Ensemble> {
    let kind = c.ensemble.or(default).ok_or_else(|| anyhow!("either --input or --ensemble is required"))?;
    let n = c.n.ok_or_else(|| anyhow!("--n is required with --ensemble"))?;
    let e = Ensemble { kind, n, a: c.a, b: c.b, degree: c.degree, seed: c.seed };
    e.validate()?;
    Ok(e)
}

/// `(trial, instance)` pairs from `--input` (a single trial) or an ensemble.
fn instances(c: &Common, default: Option<EnsembleKind>) -> Result<Vec<(u64, Instance)>> {
    if let Some(path) = &c.input {
        return Ok(vec![(0, load_instance(path)?)]);
    }
    let e = ensemble(c, default)?;
    (0..c.trials.unwrap_or(1)).map(|t| Ok((t, e.draw(t)?))).collect()
}

/// Search seed for trial `t`, independent of the ensemble draw stream.
fn search_seed(seed: u64, trial: u64) -> u64 {
    child_seed(seed, trial)
}

fn is_zero_diagonal(h: &HermitianMatrix) -> bool {
    h.diag().iter().all(|&d| d == 0.0)
}

pub fn pave(c: &Common) -> Result<Outcome> {
    let inst = instances(c, None)?;
    let params = SearchParams::default();
    let per_trial: Vec<Result<Outcome>> = inst
        .par_iter()
        .map(|(trial, instance)| {
            let mut out = Vec::new();
            let mut checks = Checks::default();
            let seed = search_seed(c.seed, *trial);
            match instance {
                Instance::Hermitian(h) => {
                    let n = h.n();
                    let mut prev: Option<f64> = None;
                    for r in c.r.iter() {
                        let method = c.method.resolve(n, r);
                        match c.objective {
                            ObjectiveArg::Norm => {
                                let rep = paving::paving_search(h, r, method, seed, &params)?;
                                let direct = paving::paving_norm(h, &rep.partition)?;
                                checks.at_most("epsilon-consistent", (direct.epsilon - rep.epsilon).abs(), 1e-12);
                                checks.holds("blocks-within-r", rep.partition.num_blocks() <= r);
                                if method == Method::Exact {
                                    if let Some(p) = prev {
                                        checks.at_most("exact-nonincreasing-in-r", rep.epsilon - p, 1e-12);
                                    }
                                    prev = Some(rep.epsilon);
                                }
                                if r >= n && is_zero_diagonal(h) {
                                    checks.at_most("singleton-triviality", rep.epsilon, c.tol.unwrap_or(1e-12));
                                }
                                out.push(ResultRecord::Paving { trial: *trial, r, report: rep });
                            }
                            ObjectiveArg::Certificate => {
                                let cert = paving::certificate_search(h, r, method, seed, &params)?;
                                let direct = paving::positive_certificate(h, &cert.partition)?;
                                checks.at_most(
                                    "certificate-consistent",
                                    (direct.min_product - cert.min_product).abs(),
                                    1e-12,
                                );
                                checks.holds("blocks-within-r", cert.partition.num_blocks() <= r);
                                if method == Method::Exact {
                                    if let Some(p) = prev {
                                        checks.at_most("exact-nondecreasing-in-r", p - cert.min_product, 1e-12);
                                    }
                                    prev = Some(cert.min_product);
                                }
                                if r >= n {
                                    checks.at_most(
                                        "singleton-certificate",
                                        1.0 - cert.min_product,
                                        c.tol.unwrap_or(1e-10),
                                    );
                                }
                                out.push(ResultRecord::Certificate { trial: *trial, r, certificate: cert });
                            }
                        }
                    }
                }
                Instance::Upper(t) => {
                    for r in c.r.iter() {
                        let method = c.method.resolve(t.n(), r);
                        let rep = equivalence::pave_triangular_via_hermitian(t, r, method, seed, &params)?;
                        reduction_checks(&mut checks, &rep);
                        out.push(ResultRecord::Reduction { trial: *trial, r, report: rep });
                    }
                }
            }
            Ok((out, checks))
        })
        .collect();
    merge(per_trial)
}

fn reduction_checks(checks: &mut Checks, rep: &equivalence::ReductionReport) {
    let slack = rep.blocks.iter().map(|b| b.measured - b.claimed).fold(f64::NEG_INFINITY, f64::max);
    checks.at_most("half-sum-bound", slack.max(0.0), rep.tolerance);
    checks.at_most("refined-block-count", rep.refined_blocks as f64, rep.max_blocks as f64);
}

fn merge(parts: Vec<Result<Outcome>>) -> Result<Outcome> {
    let mut results = Vec::new();
    let mut checks = Checks::default();
    for part in parts {
        let (r, c) = part?;
        results.extend(r);
        for ch in c.into_vec() {
            checks.record(&ch.name, ch.pass, ch.value, ch.tol);
        }
    }
    Ok((results, checks))
}

/// Per-trial result of a scan at one `r`.
struct ScanPoint {
    value: f64,
    partition: paving::Partition,
    warm: bool,
}

pub fn scan(c: &Common) -> Result<(Outcome, String)> {
    let e = ensemble(c, None)?;
    let trials = c.trials.unwrap_or(1);
    let params = SearchParams::default();
    let norm = c.objective == ObjectiveArg::Norm;
    let rs: Vec<usize> = c.r.iter().collect();
    let per_trial: Vec<Result<Vec<ScanPoint>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let h = match e.draw(t)? {
                Instance::Hermitian(h) => h,
                Instance::Upper(_) => bail!("scan needs a Hermitian ensemble"),
            };
            let seed = search_seed(c.seed, t);
            let mut points: Vec<ScanPoint> = Vec::new();
            for &r in &rs {
                let method = c.method.resolve(h.n(), r);
                let (value, partition) = if norm {
                    let rep = paving::paving_search(&h, r, method, seed, &params)?;
                    (rep.epsilon, rep.partition)
                } else {
                    let cert = paving::certificate_search(&h, r, method, seed, &params)?;
                    (cert.epsilon, cert.partition)
                };
                // both objectives report an ε to be minimized; a partition
                // with fewer blocks stays admissible at larger r
                let point = match points.last() {
                    Some(p) if p.value < value => {
                        ScanPoint { value: p.value, partition: p.partition.clone(), warm: true }
                    }
                    _ => ScanPoint { value, partition, warm: false },
                };
                points.push(point);
            }
            Ok(points)
        })
        .collect();
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;

    let mut checks = Checks::default();
    for points in &per_trial {
        for w in points.windows(2) {
            checks.at_most("nonincreasing-in-r", w[1].value - w[0].value, 1e-12);
        }
        for (p, &r) in points.iter().zip(&rs) {
            if r >= e.n {
                if !norm {
                    checks.at_most("singleton-certificate", p.value, c.tol.unwrap_or(1e-10));
                } else if e.kind == EnsembleKind::ZeroDiagHermitian {
                    checks.at_most("singleton-triviality", p.value, c.tol.unwrap_or(1e-12));
                }
            }
        }
    }
    let mut results = Vec::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["r", "method", "objective", "trials", "mean", "min", "max"])?;
    if trials > 0 {
        for (k, &r) in rs.iter().enumerate() {
            let values: Vec<f64> = per_trial.iter().map(|p| p[k].value).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let method = c.method.resolve(e.n, r);
            let objective = if norm { "epsilon" } else { "certificate-epsilon" };
            csv.write_record([
                r.to_string(),
                method.to_string(),
                objective.to_string(),
                trials.to_string(),
                format!("{mean:.12e}"),
                format!("{min:.12e}"),
                format!("{max:.12e}"),
            ])?;
            results.push(ResultRecord::ScanRow(ScanRow {
                r,
                method,
                objective: objective.into(),
                trials,
                mean,
                min,
                max,
                values,
                partitions: per_trial.iter().map(|p| p[k].partition.clone()).collect(),
                warm_started: (0..trials).filter(|&t| per_trial[t as usize][k].warm).collect(),
            }));
        }
    }
    let csv = String::from_utf8(csv.into_inner().map_err(|e| anyhow!("csv: {e}"))?)?;
    Ok(((results, checks), csv))
}

fn load_symbol(path: &Path) -> Result<TrigSymbol> {
    let f: ensembles::SymbolFile = parse_json(path)?;
    f.into_symbol().with_context(|| format!("symbol in {}", path.display()))
}

pub fn toeplitz(c: &Common) -> Result<Outcome> {
    let n = c.n.ok_or_else(|| anyhow!("--n is required"))?;
    let symbols: Vec<(u64, TrigSymbol)> = match &c.input {
        Some(p) => vec![(0, load_symbol(p)?)],
        None => (0..c.trials.unwrap_or(1))
            .map(|t| (t, ensembles::random_analytic_symbol(c.degree, child_seed(c.seed, t))))
            .collect(),
    };
    let params = SearchParams::default();
    let parts: Vec<Result<Outcome>> = symbols
        .par_iter()
        .map(|(trial, f)| {
            let mut out = Vec::new();
            let mut checks = Checks::default();
            let section = ensembles::toeplitz_section(f, n);
            checks.holds(
                "section-strictly-upper",
                UpperTriangularMatrix::new(section).map(|t| t.is_strict()).unwrap_or(false),
            );
            for r in c.r.iter() {
                let method = c.method.resolve(n, r);
                let rep =
                    equivalence::toeplitz_paving_experiment(f, n, r, method, search_seed(c.seed, *trial), &params)?;
                reduction_checks(&mut checks, &rep);
                out.push(ResultRecord::Reduction { trial: *trial, r, report: rep });
            }
            Ok((out, checks))
        })
        .collect();
    merge(parts)
}

pub fn extend(c: &Common, weights: Option<&Path>) -> Result<Outcome> {
    let mats: Vec<(u64, HermitianMatrix)> = match &c.input {
        Some(p) => vec![(0, HermitianMatrix::new(load_matrix(p)?).with_context(|| p.display().to_string())?)],
        None => instances(c, Some(EnsembleKind::ZeroDiagHermitian))?
            .into_iter()
            .map(|(t, i)| match i {
                Instance::Hermitian(h) => Ok((t, h)),
                Instance::Upper(_) => bail!("extend needs a Hermitian matrix"),
            })
            .collect::<Result<_>>()?,
    };
    let state = match weights {
        Some(p) => {
            let s: DiagonalState = parse_json(p)?;
            s
        }
        None => DiagonalState::uniform(mats.first().map_or(1, |m| m.1.n()))?,
    };
    let tol = c.tol.unwrap_or(1e-3);
    let parts: Vec<Result<Outcome>> = mats
        .par_iter()
        .map(|(trial, h)| {
            let params = ExtensionParams { seed: search_seed(c.seed, *trial), ..ExtensionParams::default() };
            let b = extension::extension_bounds(h, &state, &params)?;
            let mut checks = Checks::default();
            extension_checks(&mut checks, h, &state, &b, tol)?;
            Ok((vec![ResultRecord::Extension { trial: *trial, bounds: b }], checks))
        })
        .collect();
    merge(parts)
}

pub(crate) fn extension_checks(
    checks: &mut Checks,
    h: &HermitianMatrix,
    s: &DiagonalState,
    b: &extension::ExtensionBounds,
    tol: f64,
) -> Result<()> {
    checks.at_most("lower-le-upper", b.lower - b.upper, 1e-9);
    checks.at_most("weak-duality", -b.gap_lower.min(b.gap_upper), 1e-9);
    checks.at_most("duality-gap", b.gap, tol);
    checks.holds("primal-extends-state", b.primal_witness_lower.extends(s) && b.primal_witness_upper.extends(s));
    let up = linalg::min_eigenvalue(&h.neg().add_diagonal(&b.dual_witness_upper))?;
    let neg_low: Vec<f64> = b.dual_witness_lower.iter().map(|d| -d).collect();
    let low = linalg::min_eigenvalue(&h.add_diagonal(&neg_low))?;
    checks.at_most("dual-feasible", -(up.min(low)), 1e-9);
    Ok(())
}

pub fn factor(c: &Common, kind: crate::config::FactorKind) -> Result<Outcome> {
    let mut checks = Checks::default();
    let mut out = Vec::new();
    match kind {
        crate::config::FactorKind::FejerRiesz => {
            let symbols: Vec<(u64, TrigSymbol)> = match &c.input {
                Some(p) => vec![(0, load_symbol(p)?)],
                None => (0..c.trials.unwrap_or(1))
                    .map(|t| (t, ensembles::random_positive_symbol(c.degree, 0.5, child_seed(c.seed, t))))
                    .collect(),
            };
            for (trial, p) in symbols {
                let (rec, ch) = fejer_riesz_record(trial, &p, c.tol.unwrap_or(1e-8))?;
                out.push(rec);
                for x in ch.into_vec() {
                    checks.record(&x.name, x.pass, x.value, x.tol);
                }
            }
        }
        crate::config::FactorKind::Cholesky => {
            for (trial, inst) in instances(c, Some(EnsembleKind::PositiveBand))? {
                let Instance::Hermitian(p) = inst else { bail!("cholesky needs a Hermitian matrix") };
                let t = linalg::cholesky_upper(&p)?;
                let ti = linalg::triangular_inverse(&t)?;
                let dev = t.diag().iter().zip(ti.diag()).map(|(a, b)| (a * b - 1.0).norm()).fold(0.0, f64::max);
                let back = t.matrix().adjoint().matmul(t.matrix())?.sub(p.matrix())?.max_abs();
                let tol = c.tol.unwrap_or(1e-10);
                checks.at_most("diagonal-homomorphism", dev, tol);
                checks.at_most("reconstruction", back, tol * (1.0 + linalg::spectral_norm(&p)?));
                out.push(ResultRecord::Cholesky { trial, factor: t.matrix().to_file(), max_diagonal_deviation: dev });
            }
        }
    }
    Ok((out, checks))
}

/// Factors `p`, then checks the grid reconstruction, the root locations and
/// the finite-section identity at `n = 32`.
pub(crate) fn fejer_riesz_record(trial: u64, p: &TrigSymbol, tol: f64) -> Result<(ResultRecord, Checks)> {
    let q = ensembles::fejer_riesz(p)?;
    let grid = ensembles::positivity_grid(p.degree());
    let max_error = (0..grid)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
            (p.evaluate(t).re - q.evaluate(t).norm_sqr()).abs()
        })
        .fold(0.0, f64::max);
    let roots = ensembles::analytic_roots(&q)?;
    let min_modulus = roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let mut checks = Checks::default();
    checks.at_most("reconstruction-sup-error", max_error, tol);
    let margin = if roots.is_empty() { -1.0 } else { 1.0 - min_modulus };
    checks.record("roots-outside-closed-disk", margin < 0.0, margin, 0.0);
    checks.at_most("section-identity", ensembles::section_identity_error(p, &q, 32)?, 1e-10);
    let rec = ResultRecord::FejerRiesz {
        trial,
        symbol: p.to_file(),
        factor: q.to_file(),
        roots: roots.iter().map(|z| [z.re, z.im]).collect(),
        max_error,
    };
    Ok((rec, checks))
}
