//! Matrix families: random zero-diagonal Hermitians, strictly upper
//! triangulars, positives in a spectral band, and Toeplitz sections of
//! trigonometric symbols together with their Fejér–Riesz factors.
//!
//! Toeplitz sections use the convention `entry(i, j) = f̂(j − i)`, so an
//! analytic symbol (no negative frequencies) gives an upper triangular
//! section.

mod roots;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianMatrix, UpperTriangularMatrix};
use crate::rng::{stream_rng, Rng};

const POSITIVITY_TOL: f64 = 1e-8;
const ROOT_CIRCLE_TOL: f64 = 1e-8;
const CLAMP_TOL: f64 = 1e-9;

/// Finitely supported Fourier coefficients `f̂(−m..=m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSymbol {
    m: usize,
    coeffs: Vec<Complex64>,
}

impl TrigSymbol {
    /// `coeffs` lists `f̂(k)` for `k = −m..=m`.
    pub fn new(m: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * m + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * m + 1, found: coeffs.len() });
        }
        Ok(TrigSymbol { m, coeffs })
    }

    pub fn zero(m: usize) -> Self {
        TrigSymbol { m, coeffs: vec![Complex64::new(0.0, 0.0); 2 * m + 1] }
    }

    /// Symbol from `(k, f̂(k))` pairs; the degree is the largest `|k|`.
    pub fn from_pairs(pairs: &[(i64, Complex64)]) -> Self {
        let m = pairs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut s = TrigSymbol::zero(m);
        for &(k, v) in pairs {
            s.coeffs[(k + m as i64) as usize] += v;
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `f̂(k)`, zero outside the support.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.m {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.m as i64) as usize]
        }
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `f̂(−k) = conj f̂(k)` for all `k` (up to rounding).
    pub fn is_real(&self) -> bool {
        let tol = 1e-12 * self.scale();
        (0..=self.m as i64).all(|k| (self.coeff(-k) - self.coeff(k).conj()).norm() <= tol)
    }

    /// No negative frequencies.
    pub fn is_analytic(&self) -> bool {
        (1..=self.m as i64).all(|k| self.coeff(-k) == Complex64::new(0.0, 0.0))
    }

    /// Analytic with zero mean.
    pub fn is_strictly_analytic(&self) -> bool {
        self.is_analytic() && self.coeff(0) == Complex64::new(0.0, 0.0)
    }

    /// `f(e^{it}) = Σ f̂(k) e^{ikt}`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        (-(self.m as i64)..=self.m as i64).map(|k| self.coeff(k) * Complex64::from_polar(1.0, k as f64 * t)).sum()
    }

    /// Symbol of `Re f = (f + f̄)/2`: coefficients `(f̂(k) + conj f̂(−k))/2`.
    pub fn real_part(&self) -> TrigSymbol {
        self.map_pairs(|a, b| (a + b.conj()) * 0.5)
    }

    /// Symbol of `Im f = (f − f̄)/(2i)`: coefficients `(f̂(k) − conj f̂(−k))/(2i)`.
    pub fn imag_part(&self) -> TrigSymbol {
        self.map_pairs(|a, b| (a - b.conj()) / Complex64::new(0.0, 2.0))
    }

    fn map_pairs(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> TrigSymbol {
        let m = self.m as i64;
        let coeffs = (-m..=m).map(|k| f(self.coeff(k), self.coeff(-k))).collect();
        TrigSymbol { m: self.m, coeffs }
    }

    pub fn to_file(&self) -> SymbolFile {
        SymbolFile { m: self.m, coeffs: self.coeffs.iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: SymbolFile = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("symbol file: {e}")))?;
        f.into_symbol()
    }
}

/// Symbol file: `{"m": int, "coeffs": [[re, im], ...]}` for `k = −m..=m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolFile {
    pub m: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl SymbolFile {
    pub fn into_symbol(self) -> Result<TrigSymbol> {
        TrigSymbol::new(self.m, self.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

/// Sample file: `{"samples": [[re, im], ...]}` at angles `2πj/N`, `j = 0..N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub samples: Vec<[f64; 2]>,
}

impl SampleFile {
    pub fn samples(&self) -> Vec<Complex64> {
        self.samples.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    ZeroDiagHermitian,
    StrictUpper,
    PositiveBand,
    Toeplitz,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::ZeroDiagHermitian => "zero-diag-hermitian",
            EnsembleKind::StrictUpper => "strict-upper",
            EnsembleKind::PositiveBand => "positive-band",
            EnsembleKind::Toeplitz => "toeplitz",
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-diag-hermitian" => Ok(EnsembleKind::ZeroDiagHermitian),
            "strict-upper" => Ok(EnsembleKind::StrictUpper),
            "positive-band" => Ok(EnsembleKind::PositiveBand),
            "toeplitz" => Ok(EnsembleKind::Toeplitz),
            other => Err(Error::Invalid(format!("unknown ensemble '{other}'"))),
        }
    }
}

/// A reproducible matrix family. Trial `k` is drawn from random stream `k`
/// of `seed`, so trial 0 coincides with the plain generator for `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub n: usize,
    /// Lower band limit (positive-band only).
    pub a: f64,
    /// Upper band limit (positive-band only).
    pub b: f64,
    /// Symbol degree (toeplitz only).
    pub degree: usize,
    pub seed: u64,
}

/// One drawn instance.
#[derive(Clone, Debug)]
pub enum Instance {
    Hermitian(HermitianMatrix),
    Upper(UpperTriangularMatrix),
}

impl Ensemble {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("ensemble dimension must be at least 1".into()));
        }
        if self.kind == EnsembleKind::PositiveBand {
            check_band(self.a, self.b)?;
        }
        Ok(())
    }

    pub fn draw(&self, trial: u64) -> Result<Instance> {
        self.validate()?;
        let mut rng = stream_rng(self.seed, trial);
        Ok(match self.kind {
            EnsembleKind::ZeroDiagHermitian => Instance::Hermitian(zero_diag_hermitian_from(self.n, &mut rng)),
            EnsembleKind::StrictUpper => Instance::Upper(strict_upper_from(self.n, &mut rng)),
            EnsembleKind::PositiveBand => Instance::Hermitian(positive_band_from(self.n, self.a, self.b, &mut rng)?),
            EnsembleKind::Toeplitz => {
                let degree = self.degree.clamp(1, self.n.saturating_sub(1).max(1));
                let f = real_zero_mean_symbol_from(degree, &mut rng);
                Instance::Hermitian(toeplitz_hermitian(&f, self.n)?)
            }
        })
    }
}

fn check_band(a: f64, b: f64) -> Result<()> {
    if 0.0 < a && a < 1.0 && 1.0 < b {
        Ok(())
    } else {
        Err(Error::InvalidBand { a, b })
    }
}

pub(crate) fn complex_normal(rng: &mut Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn zero_diag_hermitian_from(n: usize, rng: &mut Rng) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let z = complex_normal(rng);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::from_matrix_unchecked(m)
}

fn strict_upper_from(n: usize, rng: &mut Rng) -> UpperTriangularMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = complex_normal(rng);
        }
    }
    UpperTriangularMatrix::new(m).expect("strictly upper by construction")
}

fn positive_band_from(n: usize, a: f64, b: f64, rng: &mut Rng) -> Result<HermitianMatrix> {
    check_band(a, b)?;
    let mut g = zero_diag_hermitian_from(n, rng).into_matrix();
    for i in 0..n {
        g[(i, i)] = Complex64::new(rng.sample(StandardNormal), 0.0);
    }
    let g = HermitianMatrix::from_matrix_unchecked(g);
    let norm = linalg::spectral_norm(&g)?;
    let half_width = 0.5 * (b - a);
    let s = if norm > 0.0 { half_width / norm } else { 0.0 };
    let shifted = CMatrix::identity(n)
        .scale(Complex64::new(0.5 * (a + b), 0.0))
        .add(&g.matrix().scale(Complex64::new(s, 0.0)))?;
    clamp_to_band(&HermitianMatrix::from_matrix_unchecked(shifted), a, b)
}

fn real_zero_mean_symbol_from(m: usize, rng: &mut Rng) -> TrigSymbol {
    let mut f = TrigSymbol::zero(m);
    for k in 1..=m {
        let z = complex_normal(rng);
        f.coeffs[m + k] = z;
        f.coeffs[m - k] = z.conj();
    }
    f
}

/// Off-diagonal entries i.i.d. complex standard normal (`E|z|² = 1`),
/// conjugate-mirrored; zero diagonal.
pub fn random_zero_diag_hermitian(n: usize, seed: u64) -> HermitianMatrix {
    zero_diag_hermitian_from(n, &mut stream_rng(seed, 0))
}

/// Entries above the diagonal i.i.d. complex standard normal.
pub fn random_strict_upper(n: usize, seed: u64) -> UpperTriangularMatrix {
    strict_upper_from(n, &mut stream_rng(seed, 0))
}

/// Random element of `𝒫[a, b]`: a random Hermitian rescaled into the band,
/// then clamped.
pub fn random_positive_band(n: usize, a: f64, b: f64, seed: u64) -> Result<HermitianMatrix> {
    positive_band_from(n, a, b, &mut stream_rng(seed, 0))
}

/// Random real symbol of degree `m` with `f̂(0) = 0`.
pub fn random_real_symbol(m: usize, seed: u64) -> TrigSymbol {
    real_zero_mean_symbol_from(m, &mut stream_rng(seed, 0))
}

/// Random analytic symbol `Σ_{k=1..m} f̂(k) e^{ikt}` (zero mean), complex
/// standard normal coefficients.
pub fn random_analytic_symbol(m: usize, seed: u64) -> TrigSymbol {
    let mut rng = stream_rng(seed, 0);
    let mut f = TrigSymbol::zero(m);
    for k in 1..=m {
        f.coeffs[m + k] = complex_normal(&mut rng);
    }
    f
}

/// Random strictly positive symbol `|q₀|² + margin` with `q₀` analytic of
/// degree `m` (constant term included).
pub fn random_positive_symbol(m: usize, margin: f64, seed: u64) -> TrigSymbol {
    let mut rng = stream_rng(seed, 0);
    let mut q = TrigSymbol::zero(m);
    for k in 0..=m {
        q.coeffs[m + k] = complex_normal(&mut rng);
    }
    let mut p = modulus_squared(&q);
    p.coeffs[p.m] += margin;
    p
}

/// `|q|²` for an analytic `q`: `p̂(k) = Σ_b q̂(b + k) conj q̂(b)`.
pub fn modulus_squared(q: &TrigSymbol) -> TrigSymbol {
    let m = q.degree() as i64;
    let mut p = TrigSymbol::zero(q.degree());
    for k in -m..=m {
        p.coeffs[(k + m) as usize] = (0..=m).map(|b| q.coeff(b + k) * q.coeff(b).conj()).sum();
    }
    p
}

/// Largest `|T_p(i, j) − (T_q* T_q)(i, j)|` over `n × n` sections, restricted
/// to entries with `min(i, j) ≥ d`, `d` the degree of `q`. These entries
/// agree exactly when `p = |q|²`.
pub fn section_identity_error(p: &TrigSymbol, q: &TrigSymbol, n: usize) -> Result<f64> {
    let tp = toeplitz_section(p, n);
    let tq = toeplitz_section(q, n);
    let prod = tq.adjoint().matmul(&tq)?;
    let d = q.degree();
    let mut worst = 0.0f64;
    for i in d..n {
        for j in d..n {
            worst = worst.max((tp[(i, j)] - prod[(i, j)]).norm());
        }
    }
    Ok(worst)
}

/// Clamps every eigenvalue into `[a, b]` and reassembles.
pub fn clamp_to_band(h: &HermitianMatrix, a: f64, b: f64) -> Result<HermitianMatrix> {
    check_band(a, b)?;
    let spectrum = linalg::eig_hermitian(h)?;
    let out = spectrum.apply(|l| l.clamp(a, b));
    debug_assert!({
        let ev = linalg::eigvalsh(&out)?;
        ev[0] >= a - CLAMP_TOL && ev[ev.len() - 1] <= b + CLAMP_TOL
    });
    Ok(out)
}

/// `n × n` section with `entry(i, j) = f̂(j − i)`.
pub fn toeplitz_section(f: &TrigSymbol, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| f.coeff(j as i64 - i as i64))
}

/// Section of a real-valued symbol as a Hermitian matrix.
pub fn toeplitz_hermitian(f: &TrigSymbol, n: usize) -> Result<HermitianMatrix> {
    if !f.is_real() {
        return Err(Error::NotRealSymbol);
    }
    HermitianMatrix::new(toeplitz_section(f, n))
}

/// Fourier coefficients `f̂(k) = (1/N) Σ_j s_j e^{−2πikj/N}` for `|k| ≤ m`
/// from `N` samples at angles `2πj/N`.
pub fn symbol_coeffs_from_samples(samples: &[Complex64], m: usize) -> Result<TrigSymbol> {
    let big_n = samples.len();
    if big_n < 2 * m + 1 {
        return Err(Error::InsufficientSamples { samples: big_n, needed: 2 * m + 1 });
    }
    let coeffs = (-(m as i64)..=m as i64)
        .map(|k| {
            let s: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    // reduce k·j mod N before forming the angle
                    let kj = (k * j as i64).rem_euclid(big_n as i64) as f64;
                    x * Complex64::from_polar(1.0, -2.0 * PI * kj / big_n as f64)
                })
                .sum();
            s / big_n as f64
        })
        .collect();
    TrigSymbol::new(m, coeffs)
}

/// Grid size used for positivity checks of degree-`m` symbols.
pub fn positivity_grid(m: usize) -> usize {
    1024.max(8 * m)
}

/// Factors a strictly positive real trigonometric polynomial `p` as `|q|²`
/// with `q` analytic of the same degree, all roots of `q` outside the closed
/// unit disk and `q(0) > 0`.
///
/// The roots of `z^d p(z)` (`d` the effective degree) pair up as `r`,
/// `1/r̄`; the `d` roots outside the circle define `q` up to a constant,
/// whose phase makes `q(0)` positive and whose modulus is first matched at
/// the largest grid sample of `p` and then refined by least squares over
/// the grid.
pub fn fejer_riesz(p: &TrigSymbol) -> Result<TrigSymbol> {
    if !p.is_real() {
        return Err(Error::NotRealSymbol);
    }
    let m = p.degree();
    let grid = positivity_grid(m);
    let samples: Vec<f64> = (0..grid).map(|j| p.evaluate(2.0 * PI * j as f64 / grid as f64).re).collect();
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= POSITIVITY_TOL {
        return Err(Error::NotPositive { min });
    }
    let tiny = 1e-14 * p.scale();
    let d = (0..=m).rev().find(|&k| p.coeff(k as i64).norm() > tiny).unwrap_or(0);
    let mut q = TrigSymbol::zero(m);
    if d == 0 {
        q.coeffs[m] = Complex64::new(p.coeff(0).re.sqrt(), 0.0);
        return Ok(q);
    }

    let laurent: Vec<Complex64> = (0..=2 * d).map(|j| p.coeff(j as i64 - d as i64)).collect();
    let mut all = roots::poly_roots(&laurent)?;
    all.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    if let Some(bad) = all.iter().find(|z| (z.norm() - 1.0).abs() <= ROOT_CIRCLE_TOL) {
        return Err(Error::RootOnCircle { modulus: bad.norm() });
    }
    let outside = &all[..d];
    if outside.iter().any(|z| z.norm() <= 1.0) {
        return Err(Error::RootOnCircle { modulus: outside[d - 1].norm() });
    }

    // monic Π (z − r_k), coefficients by ascending power
    let mut g = vec![Complex64::new(1.0, 0.0)];
    for &r in outside {
        let mut next = vec![Complex64::new(0.0, 0.0); g.len() + 1];
        for (k, &a) in g.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * r;
        }
        g = next;
    }
    let g_mod_sq: Vec<f64> = (0..grid)
        .map(|j| roots::poly_eval(&g, Complex64::from_polar(1.0, 2.0 * PI * j as f64 / grid as f64)).norm_sqr())
        .collect();
    let peak = (0..grid).max_by(|&i, &j| samples[i].total_cmp(&samples[j])).unwrap_or(0);
    let initial = samples[peak] / g_mod_sq[peak];
    let num: f64 = samples.iter().zip(&g_mod_sq).map(|(s, w)| s * w).sum();
    let den: f64 = g_mod_sq.iter().map(|w| w * w).sum();
    let modulus_sq = if den > 0.0 { num / den } else { initial };
    let phase = g[0].conj() / g[0].norm();
    let constant = phase * modulus_sq.sqrt();
    for (k, &gk) in g.iter().enumerate() {
        q.coeffs[m + k] = gk * constant;
    }
    q.coeffs[m] = Complex64::new(q.coeffs[m].re, 0.0);
    Ok(q)
}

/// Roots of the analytic polynomial `Σ_{k≥0} q̂(k) z^k`.
pub fn analytic_roots(q: &TrigSymbol) -> Result<Vec<Complex64>> {
    let m = q.degree();
    let mut c: Vec<Complex64> = (0..=m).map(|k| q.coeff(k as i64)).collect();
    while c.len() > 1 && c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    roots::poly_roots(&c)
}
