//! Reductions between paving problems and identity checks.
//!
//! A strictly upper triangular `T` is paved through its Hermitian parts
//! `H₁ = T + T*` and `H₂ = i(T − T*)`: since `T = H₁/2 − iH₂/2`, every block of
//! the common refinement of pavings of `H₁` and `H₂` satisfies
//! `‖P_A T P_A‖ ≤ (‖P_A H₁ P_A‖ + ‖P_A H₂ P_A‖)/2`. Toeplitz sections of an
//! analytic symbol are handled the same way through `Re f` and `Im f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{self, TrigSymbol};
use crate::error::{Error, Result};
use crate::extension::{hoffman_product, DensityMatrix};
use crate::linalg::{self, CMatrix, HermitianMatrix, UpperTriangularMatrix};
use crate::paving::{self, Method, Partition, PavingReport, PositiveCertificate, SearchParams};

/// Slack on every measured-versus-claimed comparison.
pub const REDUCTION_TOL: f64 = 1e-12;
/// Slack on the logmodular identities.
pub const LOGMODULAR_TOL: f64 = 1e-10;

/// Measured and claimed bound on one refined block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockCheck {
    pub block: Vec<usize>,
    pub measured: f64,
    pub claimed: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionReport {
    pub source: String,
    pub intermediate: Vec<PavingReport>,
    pub refined: Partition,
    /// Number of blocks in the refinement.
    pub refined_blocks: usize,
    /// Product of the block counts of the intermediate pavings.
    pub max_blocks: usize,
    pub blocks: Vec<BlockCheck>,
    /// Largest claimed block bound; `None` when nothing is claimed.
    pub claimed: Option<f64>,
    /// Largest measured block value.
    pub measured: f64,
    /// `measured / ‖source‖`, 0 for a zero source.
    pub ratio: f64,
    pub certificate: Option<PositiveCertificate>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Paves `T + T*` and `i(T − T*)` with `r` blocks each and checks the
/// half-sum bound on the common refinement.
pub fn pave_triangular_via_hermitian(
    t: &UpperTriangularMatrix,
    r: usize,
    method: Method,
    seed: u64,
    params: &SearchParams,
) -> Result<ReductionReport> {
    if !t.is_strict() {
        return Err(Error::NotStrictlyUpper);
    }
    let m = t.matrix();
    let adj = m.adjoint();
    let h1 = HermitianMatrix::new(m.add(&adj)?)?;
    let h2 = HermitianMatrix::new(m.sub(&adj)?.scale(Complex64::new(0.0, 1.0)))?;
    let p1 = paving::paving_search(&h1, r, method, seed, params)?;
    let p2 = paving::paving_search(&h2, r, method, seed, params)?;
    let bounds = |idx: &[usize]| -> Result<f64> {
        let a = linalg::spectral_norm(&linalg::compress(&h1, idx)?)?;
        let b = linalg::spectral_norm(&linalg::compress(&h2, idx)?)?;
        Ok(0.5 * (a + b))
    };
    finish("strictly upper triangular T via T + T* and i(T − T*)".into(), m, p1, p2, bounds)
}

/// Paves the Hermitian sections of `Re f` and `Im f` for an analytic `f`
/// with zero mean and checks `‖P_A T_f P_A‖ ≤ ‖P_A T_Re P_A‖ + ‖P_A T_Im P_A‖`.
pub fn toeplitz_paving_experiment(
    f: &TrigSymbol,
    n: usize,
    r: usize,
    method: Method,
    seed: u64,
    params: &SearchParams,
) -> Result<ReductionReport> {
    if !f.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    if f.coeff(0) != Complex64::new(0.0, 0.0) {
        return Err(Error::NonzeroMean);
    }
    let tf = ensembles::toeplitz_section(f, n);
    let hr = ensembles::toeplitz_hermitian(&f.real_part(), n)?;
    let hi = ensembles::toeplitz_hermitian(&f.imag_part(), n)?;
    let p1 = paving::paving_search(&hr, r, method, seed, params)?;
    let p2 = paving::paving_search(&hi, r, method, seed, params)?;
    let bounds = |idx: &[usize]| -> Result<f64> {
        let a = linalg::spectral_norm(&linalg::compress(&hr, idx)?)?;
        let b = linalg::spectral_norm(&linalg::compress(&hi, idx)?)?;
        Ok(a + b)
    };
    finish(format!("Toeplitz section n = {n} of an analytic symbol of degree {}", f.degree()), &tf, p1, p2, bounds)
}

fn finish(
    source: String,
    m: &CMatrix,
    p1: PavingReport,
    p2: PavingReport,
    bound: impl Fn(&[usize]) -> Result<f64>,
) -> Result<ReductionReport> {
    let refined = paving::refine(&p1.partition, &p2.partition)?;
    let max_blocks = p1.partition.num_blocks() * p2.partition.num_blocks();
    let mut blocks = Vec::new();
    for b in refined.blocks() {
        let measured = linalg::compress_general(m, &b)?.operator_norm()?;
        let claimed = bound(&b)?;
        blocks.push(BlockCheck { pass: measured <= claimed + REDUCTION_TOL, block: b, measured, claimed });
    }
    let measured = blocks.iter().map(|b| b.measured).fold(0.0, f64::max);
    let claimed = blocks.iter().map(|b| b.claimed).fold(0.0, f64::max);
    let norm = m.operator_norm()?;
    let refined_blocks = refined.num_blocks();
    let pass = blocks.iter().all(|b| b.pass) && refined_blocks <= max_blocks;
    Ok(ReductionReport {
        source,
        intermediate: vec![p1, p2],
        refined,
        refined_blocks,
        max_blocks,
        blocks,
        claimed: Some(claimed),
        measured,
        ratio: if norm > 0.0 { measured / norm } else { 0.0 },
        certificate: None,
        tolerance: REDUCTION_TOL,
        pass,
    })
}

/// Paves `H = P − diag(P)` and reports, on the same partition, the positive
/// certificate of `P`. No inequality between the two is asserted.
pub fn positive_from_paving(
    p: &HermitianMatrix,
    r: usize,
    method: Method,
    seed: u64,
    params: &SearchParams,
) -> Result<ReductionReport> {
    linalg::cholesky_upper(p)?;
    let h = p.off_diagonal();
    let rep = paving::paving_search(&h, r, method, seed, params)?;
    let cert = paving::positive_certificate(p, &rep.partition)?;
    let refined = rep.partition.clone();
    let blocks = refined
        .blocks()
        .into_iter()
        .zip(&rep.per_block_norms)
        .map(|(block, &measured)| BlockCheck { block, measured, claimed: measured, pass: true })
        .collect();
    Ok(ReductionReport {
        source: "positive P through its off-diagonal part".into(),
        refined_blocks: refined.num_blocks(),
        max_blocks: refined.num_blocks(),
        measured: rep.per_block_norms.iter().copied().fold(0.0, f64::max),
        ratio: rep.epsilon,
        refined,
        intermediate: vec![rep],
        blocks,
        claimed: None,
        certificate: Some(cert),
        tolerance: REDUCTION_TOL,
        pass: true,
    })
}

/// All eigenvalues of `P_A H P_A` lie in `[t − ε − 1e-12, t + ε + 1e-12]`.
pub fn sandwich_check(h: &HermitianMatrix, idx: &[usize], t: f64, eps: f64) -> Result<bool> {
    let ev = linalg::eigvalsh(&linalg::compress(h, idx)?)?;
    let slack = eps + REDUCTION_TOL;
    Ok(ev[0] >= t - slack && ev[ev.len() - 1] <= t + slack)
}

/// The three quantities along the logmodular chain for `P = T*T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogmodularRecord {
    /// `trace(ρ T*T)`.
    pub trace_p: f64,
    /// `|trace(ρ T)|²`.
    pub trace_t_squared: f64,
    pub cauchy_schwarz: bool,
    /// `diag(T)_k · diag(T⁻¹)_k`.
    pub diagonal_products: Vec<Complex64>,
    pub max_diagonal_deviation: f64,
    pub homomorphism: bool,
    /// `trace(ρP) · trace(ρP⁻¹)`.
    pub hoffman: f64,
    pub hoffman_bound: bool,
    pub pass: bool,
}

pub fn logmodular_chain_check(p: &HermitianMatrix, rho: &DensityMatrix) -> Result<LogmodularRecord> {
    if rho.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), found: rho.n() });
    }
    let t = linalg::cholesky_upper(p)?;
    let ti = linalg::triangular_inverse(&t)?;
    let n = p.n();
    let rm = rho.matrix();
    let mut trace_t = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            trace_t += rm.get(i, j) * t.get(j, i);
        }
    }
    let tt = HermitianMatrix::new(t.matrix().adjoint().matmul(t.matrix())?)?;
    let trace_p = rho.expectation(&tt)?;
    let trace_t_squared = trace_t.norm_sqr();
    let diagonal_products: Vec<Complex64> = t.diag().iter().zip(ti.diag()).map(|(a, b)| a * b).collect();
    let max_diagonal_deviation = diagonal_products.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
    let hoffman = hoffman_product(rho, p)?;
    let cauchy_schwarz = trace_p >= trace_t_squared - LOGMODULAR_TOL;
    let homomorphism = max_diagonal_deviation <= LOGMODULAR_TOL;
    let hoffman_bound = hoffman >= 1.0 - LOGMODULAR_TOL;
    Ok(LogmodularRecord {
        trace_p,
        trace_t_squared,
        cauchy_schwarz,
        diagonal_products,
        max_diagonal_deviation,
        homomorphism,
        hoffman,
        hoffman_bound,
        pass: cauchy_schwarz && homomorphism && hoffman_bound,
    })
}
