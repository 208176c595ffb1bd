use anyhow::Result;
use paving_core::ensembles;
use paving_core::equivalence::{logmodular_chain_check, sandwich_check};
use paving_core::extension::{self, hoffman_product, DensityMatrix, DiagonalState, ExtensionParams};
use paving_core::linalg::{self, HermitianMatrix};
use paving_core::paving::{self, Partition, SearchParams};
use paving_core::rng::child_seed;
use rayon::prelude::*;

use crate::commands::{extension_checks, fejer_riesz_record, Outcome};
use crate::config::{Common, Suite};
use crate::report::{Checks, ResultRecord};

/// Runs `trials` independent cases of `suite`; each case derives its own
/// seeds from `(seed, trial)`.
pub fn run(suite: Suite, c: &Common) -> Result<Outcome> {
    let trials = c.trials.unwrap_or_else(|| suite.default_trials());
    let cases: Vec<Result<(Checks, Vec<ResultRecord>)>> =
        (0..trials).into_par_iter().map(|t| case(suite, c, t, child_seed(c.seed, t))).collect();
    let mut checks = Checks::default();
    let mut records = Vec::new();
    let mut failures = 0;
    for case in cases {
        let (ch, rec) = case?;
        let list = ch.into_vec();
        if list.iter().any(|x| !x.pass) {
            failures += 1;
        }
        for x in list {
            checks.record(&x.name, x.pass, x.value, x.tol);
        }
        records.extend(rec);
    }
    let name = serde_json::to_value(suite)?.as_str().unwrap_or_default().to_string();
    let mut results = vec![ResultRecord::Suite { suite: name, trials, failures }];
    results.extend(records);
    Ok((results, checks))
}

/// Maps a seed to `[0, 1)`.
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 53) as f64
}

fn random_partition(n: usize, blocks: usize, seed: u64) -> Partition {
    let labels: Vec<usize> = (0..n as u64).map(|k| (child_seed(seed, k) % blocks as u64) as usize).collect();
    Partition::from_labels(&labels)
}

fn case(suite: Suite, c: &Common, t: u64, seed: u64) -> Result<(Checks, Vec<ResultRecord>)> {
    let mut checks = Checks::default();
    let mut records = Vec::new();
    let s1 = child_seed(seed, 1);
    let s2 = child_seed(seed, 2);
    match suite {
        Suite::Hoffman => {
            let n = 2 + (t % 7) as usize;
            let rho = DensityMatrix::random(n, s1)?;
            let q = ensembles::random_positive_band(n, 0.05, 50.0, s2)?;
            let v = hoffman_product(&rho, &q)?;
            checks.at_most("hoffman-product-at-least-one", 1.0 - v, c.tol.unwrap_or(1e-9));
            let pure = DensityMatrix::basis(n, (t as usize) % n)?;
            let inv = linalg::inverse_pd(&q)?;
            let k = (t as usize) % n;
            let diag = q.get(k, k).re * inv.get(k, k).re;
            checks.at_most("hoffman-basis-state", (hoffman_product(&pure, &q)? - diag).abs(), 1e-9 * diag.max(1.0));
        }
        Suite::CholeskyHomomorphism => {
            let n = 1 + (t % 16) as usize;
            let p = ensembles::random_positive_band(n, c.a, c.b, s1)?;
            let rho = DensityMatrix::random(n, s2)?;
            let rec = logmodular_chain_check(&p, &rho)?;
            checks.at_most("diagonal-homomorphism", rec.max_diagonal_deviation, c.tol.unwrap_or(1e-10));
            checks.holds("cauchy-schwarz", rec.cauchy_schwarz);
            checks.holds("hoffman-bound", rec.hoffman_bound);
            if !rec.pass {
                records.push(ResultRecord::Logmodular { trial: t, record: rec });
            }
        }
        Suite::Refinement => {
            let n = 2 + (t % 9) as usize;
            let h = ensembles::random_zero_diag_hermitian(n, s1);
            let a = random_partition(n, 1 + (t % 4) as usize, child_seed(seed, 3));
            let b = random_partition(n, 1 + ((t / 4) % 4) as usize, child_seed(seed, 4));
            let r = paving::refine(&a, &b)?;
            checks.holds("refined-block-count", r.num_blocks() <= a.num_blocks() * b.num_blocks());
            let er = paving::paving_norm(&h, &r)?.epsilon;
            let ea = paving::paving_norm(&h, &a)?.epsilon;
            let eb = paving::paving_norm(&h, &b)?.epsilon;
            checks.at_most("refinement-dominance", er - ea.min(eb), c.tol.unwrap_or(1e-12));
        }
        Suite::Sandwich => {
            let n = 2 + (t % 9) as usize;
            let shift = (t % 5) as f64 - 2.0;
            let h0 = ensembles::random_zero_diag_hermitian(n, s1);
            let h = h0.add_diagonal(&vec![shift; n]);
            let r = c.r.lo.min(n);
            let rep = paving::paving_search(&h0, r, c.method.resolve(n, r), s2, &SearchParams::default())?;
            let mut ok = true;
            for (block, &eps) in rep.partition.blocks().iter().zip(&rep.per_block_norms) {
                ok &= sandwich_check(&h, block, shift, eps)?;
            }
            checks.holds("principal-sandwich", ok);
            let d: Vec<f64> = (0..n as u64).map(|k| 4.0 * unit(child_seed(seed, 10 + k)) - 2.0).collect();
            let g = h0.add_diagonal(&d);
            let mut ok = true;
            for k in 0..n {
                ok &= sandwich_check(&g, &[k], g.get(k, k).re, 0.0)?;
            }
            checks.holds("singleton-sandwich", ok);
        }
        Suite::FejerRiesz => {
            let degree = 1 + (t % 8) as usize;
            let p = ensembles::random_positive_symbol(degree, 0.5, s1);
            let (rec, ch) = fejer_riesz_record(t, &p, c.tol.unwrap_or(1e-8))?;
            checks = ch;
            if !checks_pass(&checks) {
                records.push(rec);
            }
        }
        Suite::Duality => {
            let n = 2 + (t % 4) as usize;
            let w = DensityMatrix::random(n, s1)?.diag();
            let total: f64 = w.iter().sum();
            let state = DiagonalState::new(w.iter().map(|x| x / total).collect())?;
            let diag: Vec<f64> = DensityMatrix::random(n, child_seed(seed, 3))?
                .diag()
                .iter()
                .map(|d| 2.0 * d - 1.0 / n as f64)
                .collect();
            let h: HermitianMatrix = ensembles::random_zero_diag_hermitian(n, s2).add_diagonal(&diag);
            let params = ExtensionParams { seed: child_seed(seed, 4), ..ExtensionParams::default() };
            let b = extension::extension_bounds(&h, &state, &params)?;
            extension_checks(&mut checks, &h, &state, &b, c.tol.unwrap_or(1e-3))?;
            if !checks_pass(&checks) {
                records.push(ResultRecord::Extension { trial: t, bounds: b });
            }
        }
    }
    Ok((checks, records))
}

fn checks_pass(c: &Checks) -> bool {
    c.iter().all(|x| x.pass)
}
