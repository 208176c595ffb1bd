//! Dense complex linear algebra for small Hermitian problems.
//!
//! Matrices are stored row-major in a flat `Vec<Complex64>`. The Hermitian
//! eigensolver is a cyclic complex Jacobi iteration; everything else
//! (spectral norm, positivity, block completion) is built on it.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-13;
const HERMITIAN_TOL: f64 = 1e-12;
const PD_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-12;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from real rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, found: row.len() });
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Ok(CMatrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<CMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, found: other.rows * other.cols });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(CMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Submatrix with the given row and column index lists.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(row_idx.len(), col_idx.len(), |i, j| self[(row_idx[i], col_idx[j])])
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    /// Operator 2-norm, `sqrt(λ_max(M* M))`.
    pub fn operator_norm(&self) -> Result<f64> {
        if self.data.is_empty() {
            return Ok(0.0);
        }
        let gram = HermitianMatrix::from_matrix_unchecked(self.adjoint().matmul(self)?);
        let top = eigvalsh(&gram)?.last().copied().unwrap_or(0.0);
        Ok(top.max(0.0).sqrt())
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            n: self.rows,
            real: (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)].re).collect()).collect(),
            imag: Some((0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)].im).collect()).collect()),
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense self-adjoint matrix.
///
/// Construction tolerates asymmetry up to `1e-12 · ‖M‖_F` and then replaces
/// the input with `(M + M*)/2`; larger asymmetry is rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows, found: m.cols });
        }
        if m.rows == 0 {
            return Err(Error::Invalid("matrix dimension must be at least 1".into()));
        }
        let n = m.rows;
        let frob = m.frobenius_norm();
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in i..n {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_TOL * frob {
            return Err(Error::NotHermitian { asymmetry: if frob > 0.0 { asym / frob } else { asym } });
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Symmetrizes without checking. Used internally for matrices that are
    /// Hermitian up to rounding by construction.
    pub(crate) fn from_matrix_unchecked(mut m: CMatrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in i + 1..n {
                let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        HermitianMatrix(m)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(CMatrix::from_real_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        HermitianMatrix(m)
    }

    /// `J_n − I`: all ones off the diagonal, zero on it.
    pub fn ones_minus_identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        }))
    }

    pub fn n(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Off-diagonal part `H − E(H)`.
    pub fn off_diagonal(&self) -> HermitianMatrix {
        let mut m = self.0.clone();
        for i in 0..self.n() {
            m[(i, i)] = Complex64::new(0.0, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn neg(&self) -> HermitianMatrix {
        HermitianMatrix(self.0.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `H + D` for a real diagonal `D`.
    pub fn add_diagonal(&self, d: &[f64]) -> HermitianMatrix {
        let mut m = self.0.clone();
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] += Complex64::new(x, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("matrix file: {e}")))?;
        Self::new(file.into_matrix()?)
    }
}

/// Matrix file layout: `{"n": int, "real": [[...]], "imag": [[...]]}`.
/// `imag` may be omitted on input; writers always emit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub real: Vec<Vec<f64>>,
    #[serde(default)]
    pub imag: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn into_matrix(self) -> Result<CMatrix> {
        let n = self.n;
        if self.real.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.real.len() });
        }
        if let Some(im) = &self.imag {
            if im.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: im.len() });
            }
        }
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            if self.real[i].len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: self.real[i].len() });
            }
            for j in 0..n {
                m[(i, j)].re = self.real[i][j];
            }
            if let Some(im) = &self.imag {
                if im[i].len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: im[i].len() });
                }
                for j in 0..n {
                    m[(i, j)].im = im[i][j];
                }
            }
        }
        Ok(m)
    }
}

/// Upper triangular matrix (strict lower part exactly zero).
#[derive(Clone, Debug, PartialEq)]
pub struct UpperTriangularMatrix {
    m: CMatrix,
    strict: bool,
}

impl UpperTriangularMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows, found: m.cols });
        }
        if !m.is_upper_triangular() {
            return Err(Error::Invalid("matrix has nonzero entries below the diagonal".into()));
        }
        let strict = (0..m.rows).all(|i| m[(i, i)] == Complex64::new(0.0, 0.0));
        Ok(UpperTriangularMatrix { m, strict })
    }

    pub fn n(&self) -> usize {
        self.m.rows
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.n()).map(|i| self.m[(i, i)]).collect()
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.eigenvectors.rows()).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V f(Λ) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let m = CMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * fl[k]).sum());
        HermitianMatrix::from_matrix_unchecked(m)
    }
}

/// Cyclic Jacobi sweeps on a flat `n × n` Hermitian buffer. On return the
/// diagonal holds the eigenvalues; `vecs`, when given, accumulates the
/// rotations (start it at the identity).
fn jacobi_in_place(a: &mut [Complex64], n: usize, mut vecs: Option<&mut [Complex64]>) -> Result<()> {
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let off_mass = |a: &[Complex64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[i * n + j].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };
    let mut off = off_mass(a);
    let mut sweep = 0;
    while off > JACOBI_TOL * total {
        if sweep == MAX_SWEEPS {
            return Err(Error::NonConvergence { sweeps: sweep, off_diagonal: off });
        }
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let e = apq / mag;
                let se = e * s;
                let sec = se.conj();
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - sec * akq;
                    a[k * n + q] = akp * s + akq * e.conj() * c;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - se * aqk;
                    a[q * n + k] = apk * s + aqk * e * c;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(app - t * mag, 0.0);
                a[q * n + q] = Complex64::new(aqq + t * mag, 0.0);
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - sec * vkq;
                        v[k * n + q] = vkp * s + vkq * e.conj() * c;
                    }
                }
            }
        }
        off = off_mass(a);
    }
    Ok(())
}

/// Full spectral decomposition by cyclic complex Jacobi.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<Spectrum> {
    let n = h.n();
    let mut a = h.0.data.clone();
    let mut v = CMatrix::identity(n).data;
    jacobi_in_place(&mut a, n, Some(&mut v))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues = order.iter().map(|&k| a[k * n + k].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let mut a = h.0.data.clone();
    eigvals_buffer(&mut a, h.n())
}

/// Eigenvalues of a Hermitian matrix held in a scratch buffer (destroyed).
pub(crate) fn eigvals_buffer(a: &mut [Complex64], n: usize) -> Result<Vec<f64>> {
    jacobi_in_place(a, n, None)?;
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Largest absolute eigenvalue of the principal submatrix on `idx`, using
/// `scratch` as workspace. Indices are trusted.
pub(crate) fn principal_norm(h: &HermitianMatrix, idx: &[usize], scratch: &mut Vec<Complex64>) -> Result<f64> {
    let (lo, hi) = principal_extremes(h, idx, scratch)?;
    Ok(lo.abs().max(hi.abs()))
}

/// Whether the principal submatrix on `idx` has spectral norm below
/// `theta`, decided by Cholesky factorizations of `θI ∓ H_idx`.
pub(crate) fn principal_norm_below(
    h: &HermitianMatrix,
    idx: &[usize],
    theta: f64,
    scratch: &mut Vec<Complex64>,
) -> bool {
    let k = idx.len();
    if k <= 2 {
        return principal_norm(h, idx, scratch).is_ok_and(|v| v < theta);
    }
    if theta <= 0.0 {
        return false;
    }
    scratch.resize(k * k, Complex64::new(0.0, 0.0));
    for sign in [1.0, -1.0] {
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx[..=r].iter().enumerate() {
                let mut x = -h.0[(i, j)] * sign;
                if r == c {
                    x += theta;
                }
                scratch[r * k + c] = x;
            }
        }
        for j in 0..k {
            let mut d = scratch[j * k + j].re;
            for p in 0..j {
                d -= scratch[j * k + p].norm_sqr();
            }
            if d.is_nan() || d <= 0.0 {
                return false;
            }
            let ljj = d.sqrt();
            for i in j + 1..k {
                let mut x = scratch[i * k + j];
                for p in 0..j {
                    x -= scratch[i * k + p] * scratch[j * k + p].conj();
                }
                scratch[i * k + j] = x / ljj;
            }
        }
    }
    true
}

/// `(λ_min, λ_max)` of the principal submatrix on `idx`.
pub(crate) fn principal_extremes(
    h: &HermitianMatrix,
    idx: &[usize],
    scratch: &mut Vec<Complex64>,
) -> Result<(f64, f64)> {
    let k = idx.len();
    match k {
        0 => return Ok((0.0, 0.0)),
        1 => {
            let d = h.0[(idx[0], idx[0])].re;
            return Ok((d, d));
        }
        2 => {
            let a = h.0[(idx[0], idx[0])].re;
            let d = h.0[(idx[1], idx[1])].re;
            let b = h.0[(idx[0], idx[1])].norm();
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            return Ok((mid - rad, mid + rad));
        }
        _ => {}
    }
    scratch.clear();
    for &i in idx {
        for &j in idx {
            scratch.push(h.0[(i, j)]);
        }
    }
    tridiagonal_extremes(scratch, k)
}

/// Eigenvalues (unsorted) of a Hermitian buffer by Householder reduction to
/// real tridiagonal form followed by implicit QL. Destroys `a`. This is the
/// eigenvalue-only path for the inner loops of the paving searches.
pub(crate) fn tridiagonal_eigenvalues(a: &mut [Complex64], n: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut w = vec![Complex64::new(0.0, 0.0); 2 * n];
    tridiagonal_into(a, n, &mut d, &mut e, &mut w)?;
    Ok(d)
}

const STACK_DIM: usize = 48;

/// `(λ_min, λ_max)` of a Hermitian buffer via [`tridiagonal_eigenvalues`],
/// without heap allocation for small orders.
pub(crate) fn tridiagonal_extremes(a: &mut [Complex64], n: usize) -> Result<(f64, f64)> {
    let fold = |d: &[f64]| d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if n <= STACK_DIM {
        let mut d = [0.0; STACK_DIM];
        let mut e = [0.0; STACK_DIM];
        let mut w = [Complex64::new(0.0, 0.0); 2 * STACK_DIM];
        tridiagonal_into(a, n, &mut d[..n], &mut e[..n], &mut w[..2 * n])?;
        Ok(fold(&d[..n]))
    } else {
        Ok(fold(&tridiagonal_eigenvalues(a, n)?))
    }
}

/// Householder reduction using only the lower triangle of `a`, then QL.
fn tridiagonal_into(a: &mut [Complex64], n: usize, d: &mut [f64], e: &mut [f64], w: &mut [Complex64]) -> Result<()> {
    let at = |i: usize, j: usize| i * n + j;
    let (v, q) = w.split_at_mut(n);
    for k in 0..n.saturating_sub(1) {
        d[k] = a[at(k, k)].re;
        let alpha = (k + 1..n).map(|i| a[at(i, k)].norm_sqr()).sum::<f64>().sqrt();
        e[k] = alpha;
        if alpha == 0.0 || k + 2 == n {
            continue;
        }
        let x0 = a[at(k + 1, k)];
        let x0n = x0.norm();
        let phase = if x0n > 0.0 { x0 / x0n } else { Complex64::new(1.0, 0.0) };
        // v = x + phase·α·e1, reflector I − τ v v* maps x to −phase·α·e1
        for i in k + 1..n {
            v[i] = a[at(i, k)];
        }
        v[k + 1] += phase * alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        let tau = 2.0 / vnorm2;
        // p = τ A v on the trailing block, K = τ (v* p)/2, q = p − K v
        q[k + 1..n].fill(Complex64::new(0.0, 0.0));
        for i in k + 1..n {
            let row = &a[at(i, 0)..at(i, 0) + i];
            let mut s = a[at(i, i)] * v[i];
            let vi = v[i];
            for j in k + 1..i {
                s += row[j] * v[j];
                q[j] += row[j].conj() * vi;
            }
            q[i] += s;
        }
        let mut vp = 0.0;
        for i in k + 1..n {
            q[i] *= tau;
            vp += (v[i].conj() * q[i]).re;
        }
        let kk = 0.5 * tau * vp;
        for i in k + 1..n {
            q[i] -= v[i] * kk;
        }
        for i in k + 1..n {
            let (vi, qi) = (v[i], q[i]);
            for j in k + 1..=i {
                a[at(i, j)] -= vi * q[j].conj() + qi * v[j].conj();
            }
        }
    }
    d[n - 1] = a[at(n - 1, n - 1)].re;
    e[n - 1] = 0.0;
    tql_eigenvalues(d, e)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix
/// (`d` diagonal, `e[i]` couples `i` and `i + 1`). Eigenvalues land in `d`.
fn tql_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence { sweeps: iter, off_diagonal: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = if g.abs() > 1e150 { g.abs() } else { (g * g + 1.0).sqrt() };
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// `max_k |λ_k|`.
pub fn spectral_norm(h: &HermitianMatrix) -> Result<f64> {
    let ev = eigvalsh(h)?;
    Ok(ev.iter().fold(0.0f64, |m, l| m.max(l.abs())))
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    Ok(eigvalsh(h)?[0])
}

/// `λ_min(H) ≥ −tol · (1 + ‖H‖)`.
pub fn is_psd(h: &HermitianMatrix, tol: f64) -> Result<bool> {
    let ev = eigvalsh(h)?;
    let norm = ev.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    Ok(ev[0] >= -tol * (1.0 + norm))
}

/// Factors a positive definite `P` as `T* T` with `T` upper triangular and a
/// strictly positive real diagonal. Computed as the lower Cholesky factor
/// `L` of `P = L L*`, then `T = L*`.
pub fn cholesky_upper(p: &HermitianMatrix) -> Result<UpperTriangularMatrix> {
    let n = p.n();
    let tol = PD_TOL * (1.0 + spectral_norm(p)?);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = p.0[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= tol {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = p.0[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(UpperTriangularMatrix { m: l.adjoint(), strict: false })
}

/// Inverse of an upper triangular matrix by back-substitution.
pub fn triangular_inverse(t: &UpperTriangularMatrix) -> Result<UpperTriangularMatrix> {
    let n = t.n();
    for k in 0..n {
        let v = t.m[(k, k)].norm();
        if v <= SINGULAR_TOL {
            return Err(Error::Singular { index: k, value: v });
        }
    }
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = t.m[(j, j)].inv();
        for i in (0..j).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in i + 1..=j {
                s += t.m[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = -s / t.m[(i, i)];
        }
    }
    Ok(UpperTriangularMatrix { m: x, strict: false })
}

/// `P⁻¹ = T⁻¹ T⁻*` through the Cholesky factor.
pub fn inverse_pd(p: &HermitianMatrix) -> Result<HermitianMatrix> {
    let t = cholesky_upper(p)?;
    let ti = triangular_inverse(&t)?;
    let inv = ti.m.matmul(&ti.m.adjoint())?;
    Ok(HermitianMatrix::from_matrix_unchecked(inv))
}

/// Shift `δ = ‖C‖ + ‖A^{-1/2} B‖²` making `[[A, B], [B*, C + δI]]` positive
/// semidefinite, for positive definite `A`.
pub fn delta_completion(a: &HermitianMatrix, b: &CMatrix, c: &HermitianMatrix) -> Result<f64> {
    if b.rows() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.rows() });
    }
    if b.cols() != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n(), found: b.cols() });
    }
    cholesky_upper(a)?;
    let spectrum = eig_hermitian(a)?;
    let inv_sqrt = spectrum.apply(|l| 1.0 / l.sqrt());
    let x = inv_sqrt.0.matmul(b)?;
    let x_norm = x.operator_norm()?;
    Ok(spectral_norm(c)? + x_norm * x_norm)
}

/// Assembles `[[A, B], [B*, C]]`.
pub fn block_matrix(a: &HermitianMatrix, b: &CMatrix, c: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (k, l) = (a.n(), c.n());
    if b.rows() != k || b.cols() != l {
        return Err(Error::DimensionMismatch { expected: k * l, found: b.rows() * b.cols() });
    }
    let m = CMatrix::from_fn(k + l, k + l, |i, j| match (i < k, j < k) {
        (true, true) => a.0[(i, j)],
        (true, false) => b[(i, j - k)],
        (false, true) => b[(j, i - k)].conj(),
        (false, false) => c.0[(i - k, j - k)],
    });
    Ok(HermitianMatrix::from_matrix_unchecked(m))
}

/// Checks that `idx` is a nonempty set of distinct in-range indices.
pub fn validate_subset(n: usize, idx: &[usize]) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if seen[i] {
            return Err(Error::DuplicateIndex { index: i });
        }
        seen[i] = true;
    }
    Ok(())
}

/// Principal submatrix on `idx`, rows and columns in increasing index order.
/// Realizes `P_A H P_A` on the range of `P_A`.
pub fn compress(h: &HermitianMatrix, idx: &[usize]) -> Result<HermitianMatrix> {
    validate_subset(h.n(), idx)?;
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    Ok(HermitianMatrix(h.0.select(&sorted, &sorted)))
}

/// Principal submatrix of a general square matrix (`P_A M P_A` on the range).
pub fn compress_general(m: &CMatrix, idx: &[usize]) -> Result<CMatrix> {
    validate_subset(m.rows(), idx)?;
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    Ok(m.select(&sorted, &sorted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn herm(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigenvalues_of_simple_matrices() {
        let ev = eigvalsh(&HermitianMatrix::identity(3)).unwrap();
        assert!(ev.iter().all(|&l| close(l, 1.0, 1e-14)));

        let ev = eigvalsh(&HermitianMatrix::diagonal(&[1.0, -2.0, 0.5])).unwrap();
        assert_eq!(ev, vec![-2.0, 0.5, 1.0]);

        let ev = eigvalsh(&herm(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!(close(ev[0], -1.0, 1e-14) && close(ev[1], 1.0, 1e-14));
    }

    #[test]
    fn complex_spectrum_residuals() {
        // Pauli-y: eigenvalues ±1 with complex eigenvectors.
        let m = CMatrix::from_vec(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        let s = eig_hermitian(&h).unwrap();
        assert!(close(s.eigenvalues[0], -1.0, 1e-14));
        assert!(close(s.eigenvalues[1], 1.0, 1e-14));

        let n = 6;
        let m = CMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            let im = if i < j {
                0.3 * (a - b)
            } else if i > j {
                0.3 * (b - a)
            } else {
                0.0
            };
            c((a + 1.0) / (b + 2.0), im)
        });
        let h = HermitianMatrix::new(m).unwrap();
        let s = eig_hermitian(&h).unwrap();
        let norm = spectral_norm(&h).unwrap();
        for k in 0..n {
            let v = s.vector(k);
            let mut res = 0.0;
            for i in 0..n {
                let hv: Complex64 = (0..n).map(|j| h.get(i, j) * v[j]).sum();
                res += (hv - v[i] * s.eigenvalues[k]).norm_sqr();
            }
            assert!(res.sqrt() <= 1e-10 * (1.0 + norm));
        }
        let gram = s.eigenvectors.adjoint().matmul(&s.eigenvectors).unwrap();
        assert!(gram.sub(&CMatrix::identity(n)).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn tridiagonal_path_matches_jacobi() {
        for n in 3..9 {
            let m = CMatrix::from_fn(n, n, |i, j| {
                let (a, b) = (i.min(j) as f64, i.max(j) as f64);
                let im = if i < j {
                    (a - 2.0 * b).sin()
                } else if i > j {
                    -(a - 2.0 * b).sin()
                } else {
                    0.0
                };
                c((1.0 + a * b).cos(), im)
            });
            let h = HermitianMatrix::new(m).unwrap();
            let want = eigvalsh(&h).unwrap();
            let mut buf = h.matrix().as_slice().to_vec();
            let mut got = tridiagonal_eigenvalues(&mut buf, n).unwrap();
            got.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "n={n}: {g} vs {w}");
            }
            let idx: Vec<usize> = (0..n).collect();
            let norm = spectral_norm(&h).unwrap();
            let mut scratch = Vec::new();
            assert!(principal_norm_below(&h, &idx, norm * (1.0 + 1e-9), &mut scratch));
            assert!(!principal_norm_below(&h, &idx, norm * (1.0 - 1e-9), &mut scratch));
        }
    }

    #[test]
    fn spectral_norms() {
        assert!(close(spectral_norm(&herm(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap(), 1.0, 1e-14));
        assert!(close(spectral_norm(&HermitianMatrix::ones_minus_identity(4)).unwrap(), 3.0, 1e-12));
        assert_eq!(spectral_norm(&HermitianMatrix::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn positivity() {
        assert!(is_psd(&HermitianMatrix::diagonal(&[2.0, 0.5]), 1e-9).unwrap());
        let m = herm(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(close(min_eigenvalue(&m).unwrap(), -1.0, 1e-14));
        assert!(!is_psd(&m, 1e-9).unwrap());
        assert!(is_psd(&HermitianMatrix::zeros(2), 0.0).unwrap());
    }

    #[test]
    fn hermitian_construction_symmetrizes_or_rejects() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-15, 1.0]]).unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        let bad = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn cholesky_examples() {
        let t = cholesky_upper(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(t.matrix(), &CMatrix::identity(3));
        let t = cholesky_upper(&herm(&[&[4.0]])).unwrap();
        assert!(close(t.get(0, 0).re, 2.0, 1e-15));

        let t = cholesky_upper(&herm(&[&[2.0, 1.0], &[1.0, 1.0]])).unwrap();
        let r2 = 2f64.sqrt();
        assert!(close(t.get(0, 0).re, r2, 1e-14));
        assert!(close(t.get(0, 1).re, 1.0 / r2, 1e-14));
        assert!(close(t.get(1, 1).re, 1.0 / r2, 1e-14));
        assert_eq!(t.get(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = cholesky_upper(&herm(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn triangular_inverse_examples() {
        let t = UpperTriangularMatrix::new(CMatrix::identity(2)).unwrap();
        assert_eq!(triangular_inverse(&t).unwrap().matrix(), &CMatrix::identity(2));

        let t = UpperTriangularMatrix::new(HermitianMatrix::diagonal(&[2.0, 4.0]).into_matrix()).unwrap();
        let inv = triangular_inverse(&t).unwrap();
        assert_eq!(inv.get(0, 0).re, 0.5);
        assert_eq!(inv.get(1, 1).re, 0.25);

        let r2 = 2f64.sqrt();
        let t =
            UpperTriangularMatrix::new(CMatrix::from_real_rows(&[vec![r2, 1.0 / r2], vec![0.0, 1.0 / r2]]).unwrap())
                .unwrap();
        let inv = triangular_inverse(&t).unwrap();
        assert!(close(inv.get(0, 0).re, 1.0 / r2, 1e-14));
        // multiplying back to the identity forces the corner to -1/sqrt(2)
        assert!(close(inv.get(0, 1).re, -1.0 / r2, 1e-14));
        let prod = t.matrix().matmul(inv.matrix()).unwrap();
        assert!(prod.sub(&CMatrix::identity(2)).unwrap().max_abs() <= 1e-14);
        assert!(close(inv.get(1, 1).re, r2, 1e-14));
    }

    #[test]
    fn triangular_inverse_singular() {
        let t =
            UpperTriangularMatrix::new(CMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap()).unwrap();
        assert!(matches!(triangular_inverse(&t), Err(Error::Singular { index: 1, .. })));
    }

    #[test]
    fn delta_completion_examples() {
        let d =
            delta_completion(&HermitianMatrix::identity(2), &CMatrix::zeros(2, 2), &HermitianMatrix::identity(2).neg())
                .unwrap();
        assert!(close(d, 1.0, 1e-14));

        let b = CMatrix::from_real_rows(&[vec![1.0]]).unwrap();
        let d = delta_completion(&HermitianMatrix::identity(1), &b, &HermitianMatrix::zeros(1)).unwrap();
        assert!(close(d, 1.0, 1e-14));
        let full = block_matrix(&HermitianMatrix::identity(1), &b, &HermitianMatrix::diagonal(&[d])).unwrap();
        assert!(is_psd(&full, 1e-9).unwrap());

        let a = HermitianMatrix::diagonal(&[2.0]);
        let d = delta_completion(&a, &b, &HermitianMatrix::zeros(1)).unwrap();
        assert!(close(d, 0.5, 1e-14));
        let full = block_matrix(&a, &b, &HermitianMatrix::diagonal(&[d])).unwrap();
        assert!(is_psd(&full, 1e-9).unwrap());
    }

    #[test]
    fn delta_completion_needs_definite_block() {
        let err = delta_completion(&HermitianMatrix::zeros(1), &CMatrix::zeros(1, 1), &HermitianMatrix::zeros(1))
            .unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn compress_examples() {
        let h = HermitianMatrix::ones_minus_identity(3);
        assert_eq!(compress(&h, &[0, 1, 2]).unwrap(), h);
        let x = herm(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(compress(&x, &[0]).unwrap(), HermitianMatrix::zeros(1));
        assert_eq!(compress(&h, &[2, 0]).unwrap(), HermitianMatrix::ones_minus_identity(2));
        assert_eq!(compress(&h, &[]), Err(Error::EmptySubset));
        assert_eq!(compress(&h, &[3]), Err(Error::IndexOutOfRange { index: 3, n: 3 }));
        assert_eq!(compress(&h, &[1, 1]), Err(Error::DuplicateIndex { index: 1 }));
    }

    #[test]
    fn matrix_file_round_trip() {
        let h = herm(&[&[1.0, 2.0], &[2.0, 3.0]]);
        let json = serde_json::to_string(&h.matrix().to_file()).unwrap();
        assert!(json.contains("\"imag\""));
        assert_eq!(HermitianMatrix::from_json_str(&json).unwrap(), h);
        let no_imag = r#"{"n": 2, "real": [[0, 1], [1, 0]]}"#;
        assert_eq!(HermitianMatrix::from_json_str(no_imag).unwrap(), herm(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert!(HermitianMatrix::from_json_str(r#"{"n": 1, "real": [[0]], "extra": 1}"#).is_err());
    }
}
