//! Extensions of diagonal states.
//!
//! A state on the diagonal algebra is a probability vector `w`; its
//! extensions to the full matrix algebra are the density matrices with
//! diagonal `w`. For Hermitian `H` the values `trace(ρH)` over those
//! extensions fill an interval `[ℓ, u]` with
//!
//! ```text
//! u = max { trace(ρH) : ρ ⪰ 0, diag ρ = w }
//!   = min { Σ w_k d_k : diag(d) − H ⪰ 0 },
//! ```
//!
//! and `ℓ` obtained from `−H`. Both sides are reported as a certified pair:
//! a feasible density matrix (primal witness) and a feasible diagonal
//! (dual witness), with their difference as the gap.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::complex_normal;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianMatrix, MatrixFile};
use crate::rng::stream_rng;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const DENSITY_PSD_TOL: f64 = 1e-9;
const DENSITY_TRACE_TOL: f64 = 1e-12;
const EXTENDS_TOL: f64 = 1e-9;
/// Diagonal padding (relative to `1 + ‖H‖`) used when embedding a dual
/// solution from the support of `w` back to all indices.
const SUPPORT_PAD: f64 = 1e-8;
const MAX_SWEEPS: usize = 5000;

/// Probability weights on `{0, …, n−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "WeightFile", into = "WeightFile")]
pub struct DiagonalState {
    w: Vec<f64>,
}

/// Weight file layout `{"w": [reals]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub w: Vec<f64>,
}

impl TryFrom<WeightFile> for DiagonalState {
    type Error = Error;
    fn try_from(f: WeightFile) -> Result<Self> {
        DiagonalState::new(f.w)
    }
}

impl From<DiagonalState> for WeightFile {
    fn from(s: DiagonalState) -> Self {
        WeightFile { w: s.w }
    }
}

impl DiagonalState {
    /// Validates `w_k ≥ 0` and `|Σ w_k − 1| ≤ 1e-12`.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidState("weight vector is empty".into()));
        }
        if let Some((k, &x)) = w.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidState(format!("weight {k} = {x} is not a nonnegative number")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidState(format!("weights sum to {sum}, not 1")));
        }
        Ok(DiagonalState { w })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidState("weight vector is empty".into()));
        }
        Ok(DiagonalState { w: vec![1.0 / n as f64; n] })
    }

    /// Point evaluation at `k`.
    pub fn pure(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, n });
        }
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Ok(DiagonalState { w })
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Exactly one weight equals 1.
    pub fn is_pure(&self) -> bool {
        self.w.iter().filter(|&&x| x == 1.0).count() == 1
    }

    /// Indices with nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&k| self.w[k] > 0.0).collect()
    }

    /// `Σ w_k H_kk`.
    pub fn evaluate_diagonal(&self, h: &HermitianMatrix) -> f64 {
        self.w.iter().enumerate().map(|(k, &x)| x * h.get(k, k).re).sum()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidState(format!("weight file: {e}")))
    }
}

/// Positive semidefinite matrix of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    /// Validates PSD within `1e-9` and unit trace within `1e-12`.
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.matrix().trace().re;
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix has trace {tr}")));
        }
        if !linalg::is_psd(&h, DENSITY_PSD_TOL)? {
            return Err(Error::InvalidState("density matrix is not positive semidefinite".into()));
        }
        Ok(DensityMatrix(h))
    }

    /// `x x*` for a unit vector `x` (normalized here).
    pub fn pure(x: &[Complex64]) -> Result<Self> {
        let norm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let n = x.len();
        let m = CMatrix::from_fn(n, n, |i, j| x[i] * x[j].conj() / norm2);
        DensityMatrix::new(HermitianMatrix::new(m)?)
    }

    /// `e_k e_k*`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, n });
        }
        Ok(DensityMatrix(HermitianMatrix::diagonal(
            &(0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
        )))
    }

    /// `X X*` for an `n × p` factor, rescaled to unit trace.
    pub fn from_factor(x: &CMatrix) -> Result<Self> {
        let g = x.matmul(&x.adjoint())?;
        let tr = g.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState("zero factor".into()));
        }
        DensityMatrix::new(HermitianMatrix::new(g.scale(Complex64::new(1.0 / tr, 0.0)))?)
    }

    /// `G G* / trace` for a complex Gaussian `n × n` matrix `G`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, 0);
        let g = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng));
        DensityMatrix::from_factor(&g)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn diag(&self) -> Vec<f64> {
        self.0.diag()
    }

    /// Diagonal equals `w` within `1e-9`.
    pub fn extends(&self, s: &DiagonalState) -> bool {
        self.n() == s.n() && self.diag().iter().zip(s.weights()).all(|(a, b)| (a - b).abs() <= EXTENDS_TOL)
    }

    /// `Re trace(ρ H)`.
    pub fn expectation(&self, h: &HermitianMatrix) -> Result<f64> {
        if h.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: h.n() });
        }
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.0.get(i, j) * h.get(j, i)).re;
            }
        }
        Ok(s)
    }

    pub fn to_file(&self) -> MatrixFile {
        self.0.matrix().to_file()
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = MatrixFile::deserialize(d)?;
        let m = file.into_matrix().map_err(serde::de::Error::custom)?;
        let h = HermitianMatrix::new(m).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(h).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionParams {
    /// Subgradient iteration cap on the dual.
    pub max_iter: usize,
    /// Random restarts of the primal search.
    pub restarts: usize,
    pub seed: u64,
    /// Target gap relative to `1 + ‖H‖`; the dual iteration stops once met.
    pub tol: f64,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        ExtensionParams { max_iter: 20000, restarts: 32, seed: 0, tol: 1e-9 }
    }
}

/// Certified interval of extension values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionBounds {
    pub lower: f64,
    pub upper: f64,
    /// `d` with `diag(d) ⪯ H` and `Σ w_k d_k = lower`.
    pub dual_witness_lower: Vec<f64>,
    /// `d` with `diag(d) ⪰ H` and `Σ w_k d_k = upper`.
    pub dual_witness_upper: Vec<f64>,
    pub primal_witness_lower: DensityMatrix,
    pub primal_witness_upper: DensityMatrix,
    /// `trace(ρ_lower H) − lower ≥ 0`.
    pub gap_lower: f64,
    /// `upper − trace(ρ_upper H) ≥ 0`.
    pub gap_upper: f64,
    /// Larger of the two side gaps.
    pub gap: f64,
    /// Subgradient iterations spent over both sides.
    pub iterations: usize,
}

/// One side of the problem: maximize `trace(ρH)`.
struct Side {
    value: f64,
    dual: Vec<f64>,
    primal: CMatrix,
    primal_value: f64,
    iterations: usize,
}

/// Computes `[ℓ, u]` for `H` and the state `s`.
pub fn extension_bounds(h: &HermitianMatrix, s: &DiagonalState, params: &ExtensionParams) -> Result<ExtensionBounds> {
    let n = h.n();
    if s.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.n() });
    }
    let up = upper_side(h, s.weights(), params)?;
    let down = upper_side(&h.neg(), s.weights(), params)?;
    let primal_witness_upper = DensityMatrix::from_factor(&up.primal)?;
    let primal_witness_lower = DensityMatrix::from_factor(&down.primal)?;
    let gap_upper = up.value - up.primal_value;
    let gap_lower = down.value - down.primal_value;
    Ok(ExtensionBounds {
        lower: -down.value,
        upper: up.value,
        dual_witness_lower: down.dual.iter().map(|d| -d).collect(),
        dual_witness_upper: up.dual,
        primal_witness_lower,
        primal_witness_upper,
        gap_lower,
        gap_upper,
        gap: gap_lower.max(gap_upper),
        iterations: up.iterations + down.iterations,
    })
}

/// `u − ℓ ≤ tol · (1 + ‖H‖)` with default solver parameters.
pub fn in_uniqueness_domain(h: &HermitianMatrix, s: &DiagonalState, tol: f64) -> Result<bool> {
    let b = extension_bounds(h, s, &ExtensionParams::default())?;
    Ok(b.upper - b.lower <= tol * (1.0 + linalg::spectral_norm(h)?))
}

/// Upper side with zero weights removed: solve on the support, then embed.
fn upper_side(h: &HermitianMatrix, w: &[f64], params: &ExtensionParams) -> Result<Side> {
    let n = h.n();
    let support: Vec<usize> = (0..n).filter(|&k| w[k] > 0.0).collect();
    if support.len() == n {
        return upper_side_positive(h, w, params);
    }
    let rest: Vec<usize> = (0..n).filter(|&k| w[k] <= 0.0).collect();
    let hs = linalg::compress(h, &support)?;
    let ws: Vec<f64> = support.iter().map(|&k| w[k]).collect();
    let inner = upper_side_positive(&hs, &ws, params)?;
    let pad = SUPPORT_PAD * (1.0 + linalg::spectral_norm(h)?);
    let ds: Vec<f64> = inner.dual.iter().map(|d| d + pad).collect();
    // [[D_S − H_S, −H_SR], [−H_RS, δI − H_R]] ⪰ 0 for δ from the completion
    let a = hs.neg().add_diagonal(&ds);
    let b = h.matrix().select(&support, &rest).scale(Complex64::new(-1.0, 0.0));
    let c = linalg::compress(h, &rest)?.neg();
    let delta = linalg::delta_completion(&a, &b, &c)?;
    let mut dual = vec![delta; n];
    for (i, &k) in support.iter().enumerate() {
        dual[k] = ds[i];
    }
    let p = inner.primal.cols();
    let mut primal = CMatrix::zeros(n, p);
    for (i, &k) in support.iter().enumerate() {
        for c in 0..p {
            primal[(k, c)] = inner.primal[(i, c)];
        }
    }
    let value = ws.iter().zip(&ds).map(|(w, d)| w * d).sum();
    Ok(Side { value, dual, primal, primal_value: inner.primal_value, iterations: inner.iterations })
}

fn upper_side_positive(h: &HermitianMatrix, w: &[f64], params: &ExtensionParams) -> Result<Side> {
    let norm = linalg::spectral_norm(h)?;
    let target = params.tol * (1.0 + norm);
    let (primal, primal_value) = primal_search(h, w, params)?;
    let (mut dual, mut value) = lift(h, w, primal_dual_candidate(h, w, &primal))?;
    let mut iterations = 0;
    if value - primal_value > target {
        let (d, v, it) = subgradient(h, w, params.max_iter, primal_value + target)?;
        iterations = it;
        if v < value {
            dual = d;
            value = v;
        }
    }
    Ok(Side { value, dual, primal, primal_value, iterations })
}

/// Shifts `d` by `max(0, −λ_min(diag(d) − H))` and returns it with its value.
fn lift(h: &HermitianMatrix, w: &[f64], mut d: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let lam = linalg::min_eigenvalue(&h.neg().add_diagonal(&d))?;
    if lam < 0.0 {
        d.iter_mut().for_each(|x| *x -= lam);
    }
    let value = w.iter().zip(&d).map(|(w, d)| w * d).sum();
    Ok((d, value))
}

/// Multipliers of the primal stationarity conditions:
/// `d_k = H_kk + ‖Σ_{j≠k} H_kj x_j‖ / √w_k`.
fn primal_dual_candidate(h: &HermitianMatrix, w: &[f64], x: &CMatrix) -> Vec<f64> {
    let (n, p) = (x.rows(), x.cols());
    let mut g = vec![Complex64::new(0.0, 0.0); p];
    (0..n)
        .map(|k| {
            off_diagonal_field(h, x, k, &mut g);
            let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            h.get(k, k).re + gn / w[k].sqrt()
        })
        .collect()
}

/// `g = Σ_{j≠k} H_kj x_j` where `x_j` is row `j` of `x`.
fn off_diagonal_field(h: &HermitianMatrix, x: &CMatrix, k: usize, g: &mut [Complex64]) {
    let (n, p) = (x.rows(), x.cols());
    g.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for j in 0..n {
        if j == k {
            continue;
        }
        let hkj = h.get(k, j);
        for c in 0..p {
            g[c] += hkj * x[(j, c)];
        }
    }
}

/// `Σ_{j,k} ⟨x_k, H_kj x_j⟩ = trace(X X* H)` as a real number.
fn factor_value(h: &HermitianMatrix, x: &CMatrix) -> f64 {
    let (n, p) = (x.rows(), x.cols());
    let mut s = 0.0;
    for k in 0..n {
        for j in 0..n {
            let hkj = h.get(k, j);
            for c in 0..p {
                s += (x[(k, c)].conj() * hkj * x[(j, c)]).re;
            }
        }
    }
    s
}

/// Primal search over factored extensions `ρ = X X*` with row norms
/// `‖x_k‖² = w_k`. Each row is set in turn to the best phase direction
/// `√w_k g/‖g‖`, `g = Σ_{j≠k} H_kj x_j`, until the value stalls. Rank-one
/// factors are the phase-vector case; the factor width used here is `n`.
/// Restarts run in parallel and the best value wins (lowest restart on ties).
fn primal_search(h: &HermitianMatrix, w: &[f64], params: &ExtensionParams) -> Result<(CMatrix, f64)> {
    let n = h.n();
    let scale = 1.0 + linalg::spectral_norm(h)?;
    let runs: Vec<(CMatrix, f64)> = (0..params.restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(params.seed, r);
            let mut x = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng));
            for k in 0..n {
                let norm = (0..n).map(|c| x[(k, c)].norm_sqr()).sum::<f64>().sqrt();
                let f = w[k].sqrt() / norm;
                for c in 0..n {
                    x[(k, c)] *= f;
                }
            }
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            let mut value = factor_value(h, &x);
            for _ in 0..MAX_SWEEPS {
                for k in 0..n {
                    off_diagonal_field(h, &x, k, &mut g);
                    let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if gn > 0.0 {
                        let f = w[k].sqrt() / gn;
                        for c in 0..n {
                            x[(k, c)] = g[c] * f;
                        }
                    }
                }
                let next = factor_value(h, &x);
                let done = next - value <= 1e-15 * scale;
                value = next;
                if done {
                    break;
                }
            }
            (x, value)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

/// Exact-penalty subgradient descent on
/// `d ↦ Σ w_k d_k − κ · min(0, λ_min(diag(d) − H))`,
/// `κ = 10 (1 + Σ w) (1 + ‖H‖)`, from `d_k = H_kk + ‖H‖`, steps `c/√t` along
/// the normalized subgradient. Every iterate is lifted to feasibility and the
/// best lifted value is kept; stops early once it is at most `stop`.
fn subgradient(h: &HermitianMatrix, w: &[f64], max_iter: usize, stop: f64) -> Result<(Vec<f64>, f64, usize)> {
    let n = h.n();
    let norm = linalg::spectral_norm(h)?;
    let wsum: f64 = w.iter().sum();
    let kappa = 10.0 * (1.0 + wsum) * (1.0 + norm);
    let c = 0.5 * (1.0 + norm);
    let mut d: Vec<f64> = (0..n).map(|k| h.get(k, k).re + norm).collect();
    let mut best = lift(h, w, d.clone())?;
    let mut iters = 0;
    for t in 1..=max_iter {
        if best.1 <= stop {
            break;
        }
        iters = t;
        let spectrum = linalg::eig_hermitian(&h.neg().add_diagonal(&d))?;
        let lam = spectrum.eigenvalues[0];
        let mut g: Vec<f64> = w.to_vec();
        if lam < 0.0 {
            let v = spectrum.vector(0);
            for k in 0..n {
                g[k] -= kappa * v[k].norm_sqr();
            }
        }
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn == 0.0 {
            break;
        }
        let step = c / (t as f64).sqrt() / gn;
        for k in 0..n {
            d[k] -= step * g[k];
        }
        let value: f64 = w.iter().zip(&d).map(|(w, d)| w * d).sum::<f64>() + wsum * (-lam.min(0.0)).max(0.0);
        if value < best.1 {
            let cand = lift(h, w, d.clone())?;
            if cand.1 < best.1 {
                best = cand;
            }
        }
    }
    Ok((best.0, best.1, iters))
}

/// `trace(ρq) · trace(ρq⁻¹)`, with `q⁻¹` through the Cholesky factor.
pub fn hoffman_product(rho: &DensityMatrix, q: &HermitianMatrix) -> Result<f64> {
    two_state_hoffman(rho, rho, q)
}

/// `trace(ρ₁q) · trace(ρ₂q⁻¹)`.
pub fn two_state_hoffman(rho1: &DensityMatrix, rho2: &DensityMatrix, q: &HermitianMatrix) -> Result<f64> {
    let inv = linalg::inverse_pd(q)?;
    Ok(rho1.expectation(q)? * rho2.expectation(&inv)?)
}

/// `e^{tH}` through the eigendecomposition.
pub fn expm_hermitian(h: &HermitianMatrix, t: f64) -> Result<HermitianMatrix> {
    Ok(linalg::eig_hermitian(h)?.apply(|l| (t * l).exp()))
}

/// `f(t) = trace(ρ e^{tH}) · trace(ρ e^{−tH})`; `f(0) = 1` is its minimum.
pub fn exponential_family(rho: &DensityMatrix, h: &HermitianMatrix, t: f64) -> Result<f64> {
    let spectrum = linalg::eig_hermitian(h)?;
    let plus = spectrum.apply(|l| (t * l).exp());
    let minus = spectrum.apply(|l| (-t * l).exp());
    Ok(rho.expectation(&plus)? * rho.expectation(&minus)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn swap() -> HermitianMatrix {
        herm(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn state_validation() {
        assert!(DiagonalState::new(vec![0.5, 0.5]).is_ok());
        assert!(DiagonalState::new(vec![0.5, 0.6]).is_err());
        assert!(DiagonalState::new(vec![1.5, -0.5]).is_err());
        assert!(DiagonalState::pure(3, 1).unwrap().is_pure());
        assert!(!DiagonalState::uniform(3).unwrap().is_pure());
        let s = DiagonalState::from_json_str(r#"{"w": [0.25, 0.75]}"#).unwrap();
        assert_eq!(s.weights(), &[0.25, 0.75]);
        assert!(DiagonalState::from_json_str(r#"{"w": [1.0], "x": 1}"#).is_err());
    }

    #[test]
    fn density_validation() {
        let half = HermitianMatrix::diagonal(&[0.5, 0.5]);
        let rho = DensityMatrix::new(half).unwrap();
        assert!(rho.extends(&DiagonalState::uniform(2).unwrap()));
        assert!(DensityMatrix::new(HermitianMatrix::diagonal(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(HermitianMatrix::diagonal(&[0.5, 0.6])).is_err());
        let r = DensityMatrix::random(4, 3).unwrap();
        assert!((r.matrix().matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_h_has_point_interval() {
        let h = HermitianMatrix::diagonal(&[3.0, 5.0]);
        let b = extension_bounds(&h, &DiagonalState::uniform(2).unwrap(), &ExtensionParams::default()).unwrap();
        assert!((b.lower - 4.0).abs() < 1e-9 && (b.upper - 4.0).abs() < 1e-9, "{b:?}");
        assert!(b.gap <= 1e-9);
    }

    #[test]
    fn swap_uniform_interval() {
        let b = extension_bounds(&swap(), &DiagonalState::uniform(2).unwrap(), &ExtensionParams::default()).unwrap();
        assert!((b.lower + 1.0).abs() < 1e-6 && (b.upper - 1.0).abs() < 1e-6, "{b:?}");
        // the dual optimum is D = ∓I
        for (l, u) in b.dual_witness_lower.iter().zip(&b.dual_witness_upper) {
            assert!((l + 1.0).abs() < 1e-6 && (u - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn swap_pure_interval() {
        let s = DiagonalState::new(vec![1.0, 0.0]).unwrap();
        let b = extension_bounds(&swap(), &s, &ExtensionParams::default()).unwrap();
        assert!(b.lower.abs() < 1e-6 && b.upper.abs() < 1e-6, "{b:?}");
        // grid oracle: the best feasible upper diagonal [[d0, ·], [·, t]] over
        // growing t has d0 = 1/t, tending to H₀₀ = 0
        let mut best = f64::INFINITY;
        for e in 0..8 {
            let t = 10f64.powi(e);
            let d0 = (1..=2000).map(|j| j as f64 * 1e-3).find(|&d0| d0 * t >= 1.0).unwrap_or(f64::INFINITY);
            best = best.min(d0);
        }
        assert!(best <= 1e-3 && b.upper <= best + 1e-9);
        let ub = DiagonalState::pure(2, 0).unwrap();
        let upper = linalg::min_eigenvalue(&swap().neg().add_diagonal(&b.dual_witness_upper)).unwrap();
        assert!(upper >= -1e-9);
        assert!(b.primal_witness_upper.extends(&ub));
    }

    #[test]
    fn uniqueness_domain_examples() {
        let d = HermitianMatrix::diagonal(&[1.0, -2.0, 0.5]);
        let w = DiagonalState::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(in_uniqueness_domain(&d, &w, 1e-6).unwrap());
        assert!(!in_uniqueness_domain(&swap(), &DiagonalState::uniform(2).unwrap(), 1e-6).unwrap());
        let h = crate::ensembles::random_zero_diag_hermitian(4, 9).add_diagonal(&[0.3, -0.2, 0.7, 1.1]);
        for k in 0..4 {
            let s = DiagonalState::pure(4, k).unwrap();
            assert!(in_uniqueness_domain(&h, &s, 1e-3).unwrap());
            let b = extension_bounds(&h, &s, &ExtensionParams::default()).unwrap();
            assert!((b.upper - h.get(k, k).re).abs() < 1e-3);
        }
    }

    #[test]
    fn random_bounds_are_certified() {
        for seed in 0..6 {
            let n = 3 + (seed as usize % 3);
            let h = crate::ensembles::random_zero_diag_hermitian(n, seed).add_diagonal(&vec![0.1 * seed as f64; n]);
            let raw: Vec<f64> = (0..n).map(|k| 1.0 + ((k as u64 + seed) % 4) as f64).collect();
            let sum: f64 = raw.iter().sum();
            let s = DiagonalState::new(raw.iter().map(|x| x / sum).collect()).unwrap();
            let b = extension_bounds(&h, &s, &ExtensionParams::default()).unwrap();
            assert!(b.lower <= b.upper + 1e-9);
            assert!(b.gap_lower >= -1e-9 && b.gap_upper >= -1e-9);
            assert!(b.gap <= 1e-3, "{b:?}");
            assert!(b.primal_witness_upper.extends(&s) && b.primal_witness_lower.extends(&s));
            let vu = b.primal_witness_upper.expectation(&h).unwrap();
            let vl = b.primal_witness_lower.expectation(&h).unwrap();
            assert!(vu <= b.upper + 1e-9 && vu >= b.upper - b.gap_upper - 1e-9);
            assert!(vl >= b.lower - 1e-9);
            let du: f64 = s.weights().iter().zip(&b.dual_witness_upper).map(|(w, d)| w * d).sum();
            assert!((du - b.upper).abs() < 1e-9);
            assert!(linalg::min_eigenvalue(&h.neg().add_diagonal(&b.dual_witness_upper)).unwrap() >= -1e-9);
            let low = HermitianMatrix::diagonal(&b.dual_witness_lower);
            let diff = HermitianMatrix::new(h.matrix().sub(low.matrix()).unwrap()).unwrap();
            assert!(linalg::min_eigenvalue(&diff).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn subgradient_alone_approaches_optimum() {
        let w = [0.5, 0.5];
        let (d, v, _) = subgradient(&swap(), &w, 20000, f64::NEG_INFINITY).unwrap();
        assert!((v - 1.0).abs() < 1e-2, "{v} {d:?}");
        assert!(linalg::min_eigenvalue(&swap().neg().add_diagonal(&d)).unwrap() >= -1e-12);
    }

    #[test]
    fn hoffman_examples() {
        let rho = DensityMatrix::random(3, 1).unwrap();
        assert!((hoffman_product(&rho, &HermitianMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let half = DensityMatrix::new(HermitianMatrix::diagonal(&[0.5, 0.5])).unwrap();
        let q = HermitianMatrix::diagonal(&[2.0, 0.5]);
        assert!((hoffman_product(&half, &q).unwrap() - 25.0 / 16.0).abs() < 1e-12);
        let e0 = DensityMatrix::basis(2, 0).unwrap();
        let e1 = DensityMatrix::basis(2, 1).unwrap();
        let q2 = herm(&[&[2.0, 1.0], &[1.0, 1.0]]);
        assert!((hoffman_product(&e0, &q2).unwrap() - 2.0).abs() < 1e-12);
        assert!((two_state_hoffman(&e0, &e1, &q).unwrap() - 4.0).abs() < 1e-12);
        let q3 = HermitianMatrix::diagonal(&[0.5, 2.0]);
        assert!((two_state_hoffman(&e0, &e1, &q3).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(
            two_state_hoffman(&rho, &rho, &HermitianMatrix::identity(3)),
            hoffman_product(&rho, &HermitianMatrix::identity(3))
        );
        assert!(matches!(
            hoffman_product(&e0, &herm(&[&[1.0, 2.0], &[2.0, 1.0]])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn exponential_family_is_flat_at_zero() {
        let rho = DensityMatrix::random(4, 5).unwrap();
        let h = crate::ensembles::random_zero_diag_hermitian(4, 6).add_diagonal(&[0.4, -1.0, 0.2, 0.0]);
        assert!((exponential_family(&rho, &h, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let step = 1e-5;
        let deriv =
            (exponential_family(&rho, &h, step).unwrap() - exponential_family(&rho, &h, -step).unwrap()) / (2.0 * step);
        assert!(deriv.abs() < 1e-8, "{deriv}");
        assert!(exponential_family(&rho, &h, 0.3).unwrap() >= 1.0);
        let e = expm_hermitian(&HermitianMatrix::diagonal(&[0.0, 1.0]), 2.0).unwrap();
        assert!((e.get(1, 1).re - 2f64.exp()).abs() < 1e-12);
    }
}
