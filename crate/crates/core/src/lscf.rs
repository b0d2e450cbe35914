//! Least-squares complex-frequency normal equations.
//!
//! With the basis `Omega(w) = exp(-j w Ts)` each output contributes the
//! Hermitian Toeplitz blocks
//!
//! ```text
//! R_rs =  sum_f w^2          conj(Omega^r) Omega^s
//! S_rs = -sum_f w^2 H        conj(Omega^r) Omega^s
//! T_rs =  sum_f w^2 |H|^2    conj(Omega^r) Omega^s
//! ```
//!
//! and eliminating the numerators leaves the reduced matrix
//! `C = sum_o (T_o - S_o^H R_o^-1 S_o)`. Fixing the top denominator
//! coefficient to one gives `D x = d` with `D` the leading `n_p x n_p`
//! block of `C` and `d` the negated last column.
//!
//! Each `T_o - S_o^H R_o^-1 S_o` is formed as the Gram matrix of the data
//! columns projected off the span of the weighted basis columns.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frf::FrfSet;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Per-output normal-equation blocks kept for numerator recovery.
#[derive(Clone, Debug)]
pub struct OutputBlocks {
    pub r_mat: DMatrix<Complex64>,
    pub s_mat: DMatrix<Complex64>,
}

#[derive(Clone, Debug)]
pub struct NormalCache {
    pub n_p: usize,
    pub ts_seconds: f64,
    pub big_c: DMatrix<Complex64>,
    pub d_mat: DMatrix<Complex64>,
    pub d_vec: DVector<Complex64>,
    pub per_output: Vec<OutputBlocks>,
}

impl NormalCache {
    /// `max |C - C^H| / max |C|`; zero for an all-zero `C`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.big_c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.big_c.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.big_c[(i, j)] - self.big_c[(j, i)].conj()).norm());
            }
        }
        worst / scale
    }

    /// Lower-right `i x i` block of `D` and the matching tail of `d`.
    pub fn subsystem(&self, i: usize) -> (DMatrix<Complex64>, DVector<Complex64>) {
        let off = self.n_p - i;
        (
            self.d_mat.view((off, off), (i, i)).into_owned(),
            self.d_vec.rows(off, i).into_owned(),
        )
    }
}

/// Monic characteristic polynomial, constant term first.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPolynomial {
    coeffs: Vec<Complex64>,
    support: BTreeSet<usize>,
}

impl CharPolynomial {
    /// Appends the monic top coefficient to the lower coefficients `x`.
    pub fn from_lower(x: &[Complex64]) -> Self {
        let mut coeffs = x.to_vec();
        coeffs.push(ONE);
        let support = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(i, _)| i)
            .collect();
        Self { coeffs, support }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn is_dense(&self) -> bool {
        self.support.len() == self.coeffs.len()
    }

    /// `A(Omega)` evaluated at `Omega`.
    pub fn eval(&self, omega: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * omega + c)
    }
}

/// Powers `Omega^0 ..= Omega^n_p` of every grid line by repeated multiplication.
fn basis_powers(frf: &FrfSet, n_p: usize) -> Vec<Vec<Complex64>> {
    let ts = frf.grid().ts_seconds();
    frf.grid()
        .omegas()
        .map(|w| {
            let omega = Complex64::from_polar(1.0, -w * ts);
            let mut pw = Vec::with_capacity(n_p + 1);
            let mut acc = ONE;
            for _ in 0..=n_p {
                pw.push(acc);
                acc *= omega;
            }
            pw
        })
        .collect()
}

/// Toeplitz matrix with entries `lag(s - r)`; `lag` is indexed by `m + n_p`.
fn toeplitz(n: usize, lags: &[Complex64]) -> DMatrix<Complex64> {
    let n_p = n - 1;
    DMatrix::from_fn(n, n, |r, s| lags[s + n_p - r])
}

/// Lag sums `sum_f g_f Omega_f^m` for `m = -n_p ..= n_p`.
fn lag_sums(powers: &[Vec<Complex64>], n_p: usize, g: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    let mut lags = vec![ZERO; 2 * n_p + 1];
    for (k, pw) in powers.iter().enumerate() {
        let gk = g(k);
        if gk == ZERO {
            continue;
        }
        lags[n_p] += gk;
        for m in 1..=n_p {
            // |Omega| = 1, so Omega^-m = conj(Omega^m)
            lags[n_p + m] += gk * pw[m];
            lags[n_p - m] += gk * pw[m].conj();
        }
    }
    lags
}

/// Builds `R_o`, `S_o`, `T_o` for every output and reduces them to `C`, `D`, `d`.
pub fn assemble_normal_cache(frf: &FrfSet, n_p: usize) -> Result<NormalCache> {
    if n_p < 1 {
        return Err(Error::Invalid("model order must be at least 1".into()));
    }
    if frf.n_lines() <= n_p {
        return Err(Error::Invalid(format!(
            "need more frequency lines ({}) than the model order ({n_p})",
            frf.n_lines()
        )));
    }
    let powers = basis_powers(frf, n_p);
    let n = n_p + 1;

    let contributions: Vec<Result<(OutputBlocks, DMatrix<Complex64>)>> = (0..frf.n_outputs())
        .into_par_iter()
        .map(|o| {
            let h = frf.h().row(o);
            let w2 = |k: usize| {
                let w = frf.weight(o, k);
                w * w
            };
            let r_mat = toeplitz(n, &lag_sums(&powers, n_p, |k| Complex64::new(w2(k), 0.0)));
            let s_mat = -toeplitz(n, &lag_sums(&powers, n_p, |k| h[k] * w2(k)));
            if r_mat.clone().cholesky().is_none() {
                return Err(Error::SingularNumerator { output: o });
            }
            // T - S^H R^-1 S = Z^H Z with Z the part of Y orthogonal to range(X),
            // where X = w Omega^k and Y = -w H Omega^k
            let n_f = powers.len();
            let x = DMatrix::from_fn(n_f, n, |k, s| powers[k][s] * frf.weight(o, k));
            let y = DMatrix::from_fn(n_f, n, |k, s| -h[k] * x[(k, s)]);
            let q = x.qr().q();
            let z = &y - &q * (q.adjoint() * &y);
            let reduced = z.adjoint() * z;
            Ok((OutputBlocks { r_mat, s_mat }, reduced))
        })
        .collect();

    let mut big_c = DMatrix::from_element(n, n, ZERO);
    let mut per_output = Vec::with_capacity(contributions.len());
    for item in contributions {
        let (blocks, reduced) = item?;
        big_c += reduced;
        per_output.push(blocks);
    }

    let d_mat = big_c.view((0, 0), (n_p, n_p)).into_owned();
    let d_vec = -big_c.view((0, n_p), (n_p, 1)).column(0).into_owned();
    Ok(NormalCache {
        n_p,
        ts_seconds: frf.grid().ts_seconds(),
        big_c,
        d_mat,
        d_vec,
        per_output,
    })
}

/// Solves `A x = b` by LU with partial pivoting; `order` labels errors.
pub(crate) fn solve_dense(a: &DMatrix<Complex64>, b: &DVector<Complex64>, order: usize) -> Result<DVector<Complex64>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let pivots: Vec<f64> = u.diagonal().iter().map(|v| v.norm()).collect();
    let max = pivots.iter().copied().fold(0.0, f64::max);
    let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    let rcond = if max == 0.0 { 0.0 } else { min / max };
    if !(rcond > f64::EPSILON) {
        return Err(Error::SingularSystem { order, rcond });
    }
    match lu.solve(b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => Err(Error::SingularSystem { order, rcond }),
    }
}

/// Dense solve of the order-`i` subsystem `D_i x_i = d_i`.
pub fn solve_order_dense(cache: &NormalCache, i: usize) -> Result<CharPolynomial> {
    if i < 1 || i > cache.n_p {
        return Err(Error::Invalid(format!("order {i} outside 1..={}", cache.n_p)));
    }
    let (d_i, rhs) = cache.subsystem(i);
    let x = solve_dense(&d_i, &rhs, i)?;
    Ok(CharPolynomial::from_lower(x.as_slice()))
}

/// Numerator coefficients `b_o = -R_o^-1 S_o a` in the full-order basis.
///
/// A denominator of lower order than the cache is embedded in the top
/// coefficients, the same slot the order-`i` subsystem solves for.
pub fn numerator_from_denominator(cache: &NormalCache, a: &CharPolynomial, o: usize) -> Result<DVector<Complex64>> {
    let blocks = cache
        .per_output
        .get(o)
        .ok_or_else(|| Error::Invalid(format!("output {o} out of range")))?;
    if a.order() > cache.n_p {
        return Err(Error::Invalid(format!(
            "denominator order {} exceeds cache order {}",
            a.order(),
            cache.n_p
        )));
    }
    let a_full = embed_denominator(a, cache.n_p);
    let chol = blocks
        .r_mat
        .clone()
        .cholesky()
        .ok_or(Error::SingularNumerator { output: o })?;
    Ok(-chol.solve(&(&blocks.s_mat * a_full)))
}

/// Full-length coefficient vector with `a` in the top slots.
pub fn embed_denominator(a: &CharPolynomial, n_p: usize) -> DVector<Complex64> {
    let mut full = DVector::from_element(n_p + 1, ZERO);
    let off = n_p - a.order();
    for (k, c) in a.coeffs().iter().enumerate() {
        full[off + k] = *c;
    }
    full
}

/// Evaluates `sum_k coeffs[k] Omega^k`.
pub fn eval_basis(coeffs: &DVector<Complex64>, omega: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * omega + c)
}
