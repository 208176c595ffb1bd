//! Polynomial roots through companion-matrix eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};

const QR_EPS: f64 = 1e-15;

/// Roots of `Σ c_k z^k` (`coeffs[k]` multiplies `z^k`). The leading
/// coefficient must be nonzero.
pub(crate) fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    if lead.norm() == 0.0 {
        return Err(Error::Invalid("leading polynomial coefficient is zero".into()));
    }
    // Upper Hessenberg companion: first row −c_{deg−1−j}/c_deg, ones below.
    let n = deg;
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        h[j] = -coeffs[deg - 1 - j] / lead;
    }
    for i in 1..n {
        h[i * n + i - 1] = Complex64::new(1.0, 0.0);
    }
    let mut roots = hessenberg_eigenvalues(&mut h, n)?;
    for z in roots.iter_mut() {
        *z = polish(coeffs, *z);
    }
    Ok(roots)
}

pub(crate) fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// A few Newton steps, kept only while the residual shrinks.
fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut res = poly_eval(coeffs, z).norm();
    for _ in 0..8 {
        let (p, dp) = poly_eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let r = poly_eval(coeffs, cand).norm();
        if r < res {
            z = cand;
            res = r;
        } else {
            break;
        }
    }
    z
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift complex QR with
/// Wilkinson shifts and deflation. Destroys `h`.
fn hessenberg_eigenvalues(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    let idx = |i: usize, j: usize| i * n + j;
    let scale: f64 = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut eig = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig.push(h[idx(0, 0)]);
            break;
        }
        let mut l = hi;
        while l > 0 {
            let mut s = h[idx(l - 1, l - 1)].norm() + h[idx(l, l)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[idx(l, l - 1)].norm() <= QR_EPS * s {
                h[idx(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig.push(h[idx(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            return Err(Error::NonConvergence { sweeps: total, off_diagonal: h[idx(hi, hi - 1)].norm() });
        }
        let a = h[idx(hi - 1, hi - 1)];
        let b = h[idx(hi - 1, hi)];
        let c = h[idx(hi, hi - 1)];
        let d = h[idx(hi, hi)];
        let mu = if iter.is_multiple_of(11) {
            d + Complex64::new(1.5 * c.norm(), 0.5 * c.norm())
        } else {
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) * 0.5 + disc;
            let m2 = (a + d) * 0.5 - disc;
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        for k in l..=hi {
            h[idx(k, k)] -= mu;
        }
        let mut rot = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[idx(k, k)];
            let y = h[idx(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cr, sr) = if r == 0.0 { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) } else { (x / r, y / r) };
            for j in k..=hi {
                let u = h[idx(k, j)];
                let v = h[idx(k + 1, j)];
                h[idx(k, j)] = cr.conj() * u + sr.conj() * v;
                h[idx(k + 1, j)] = -sr * u + cr * v;
            }
            rot.push((cr, sr));
        }
        for (off, &(cr, sr)) in rot.iter().enumerate() {
            let k = l + off;
            for i in l..=(k + 1).min(hi) {
                let u = h[idx(i, k)];
                let v = h[idx(i, k + 1)];
                h[idx(i, k)] = u * cr + v * sr;
                h[idx(i, k + 1)] = -u * sr.conj() + v * cr.conj();
            }
        }
        for k in l..=hi {
            h[idx(k, k)] += mu;
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_known_polynomials() {
        // (z − 1)(z + 2)(z − i) expanded
        let want = [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for &r in &want {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        let roots = poly_roots(&coeffs).unwrap();
        for w in want {
            assert!(roots.iter().any(|z| (z - w).norm() < 1e-12), "missing root {w}");
        }
    }

    #[test]
    fn roots_of_unity() {
        let mut coeffs = vec![c(0.0, 0.0); 9];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[8] = c(1.0, 0.0);
        let roots = poly_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 8);
        for z in roots {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!((z.powu(8) - 1.0).norm() < 1e-11);
        }
    }
}
