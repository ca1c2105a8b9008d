//! Dense polynomial helpers.
//!
//! Coefficients are stored lowest degree first, `c[i]` multiplying `x^i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Highest polynomial degree accepted for a boundary curve.
pub const MAX_CURVE_DEGREE: usize = 10;

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Value and first derivative in one Horner pass.
pub fn eval_with_derivative(c: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &ci in c.iter().rev() {
        d = d * x + v;
        v = v * x + ci;
    }
    (v, d)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect()
}

/// Antiderivative vanishing at zero.
pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(i, &ci)| ci / (i as f64 + 1.0)));
    out
}

pub fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Shifted Legendre polynomials on `[0, alpha]`, expressed in monomials of `x`.
///
/// Row `k` holds the monomial coefficients of `P_k(2x/alpha - 1)`.
pub fn shifted_legendre_table(degree: usize, alpha: f64) -> Vec<Vec<f64>> {
    let lin = [-1.0, 2.0 / alpha];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    rows.push(vec![1.0]);
    if degree >= 1 {
        rows.push(lin.to_vec());
    }
    for k in 2..=degree {
        let kf = k as f64;
        let a = multiply(&rows[k - 1], &lin);
        let b = &rows[k - 2];
        let mut next = vec![0.0; k + 1];
        for (i, v) in a.iter().enumerate() {
            next[i] += (2.0 * kf - 1.0) / kf * v;
        }
        for (i, v) in b.iter().enumerate() {
            next[i] -= (kf - 1.0) / kf * v;
        }
        rows.push(next);
    }
    rows
}

pub fn legendre_to_monomial(legendre: &[f64], alpha: f64) -> Vec<f64> {
    let table = shifted_legendre_table(legendre.len().saturating_sub(1), alpha);
    let mut out = vec![0.0; legendre.len()];
    for (row, &lk) in table.iter().zip(legendre) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += lk * r;
        }
    }
    out
}

pub fn monomial_to_legendre(mono: &[f64], alpha: f64) -> Vec<f64> {
    let n = mono.len();
    let table = shifted_legendre_table(n.saturating_sub(1), alpha);
    // The table is lower triangular in the monomial index; back-substitute.
    let mut rem = mono.to_vec();
    let mut out = vec![0.0; n];
    for k in (0..n).rev() {
        let lead = table[k][k];
        out[k] = rem[k] / lead;
        for (i, r) in rem.iter_mut().enumerate().take(k + 1) {
            *r -= out[k] * table[k][i];
        }
    }
    out
}

/// Least-squares fit of a degree-`degree` polynomial in the shifted
/// Legendre basis on `[0, alpha]`; returns Legendre coefficients.
pub fn fit_legendre(xs: &[f64], ys: &[f64], degree: usize, alpha: f64) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(Error::InvalidParameter("not enough samples for the fit".into()));
    }
    let m = xs.len();
    let mut design = DMatrix::zeros(m, degree + 1);
    for (i, &x) in xs.iter().enumerate() {
        let s = 2.0 * x / alpha - 1.0;
        let mut p0 = 1.0;
        let mut p1 = s;
        design[(i, 0)] = 1.0;
        if degree >= 1 {
            design[(i, 1)] = s;
        }
        for k in 2..=degree {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * s * p1 - (kf - 1.0) * p0) / kf;
            design[(i, k)] = p2;
            p0 = p1;
            p1 = p2;
        }
    }
    let rhs = DVector::from_column_slice(ys);
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}
