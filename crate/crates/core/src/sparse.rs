//! Greedy and convex sparse solvers for complex linear systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Result of orthogonal matching pursuit.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSolution {
    /// Selected column indices in selection order.
    pub support: Vec<usize>,
    /// Least-squares values on `support`, same order.
    pub values: Vec<Complex64>,
    pub residual_norm: f64,
    /// Residual norm before the first and after every accepted selection.
    pub residual_history: Vec<f64>,
}

impl SparseSolution {
    pub fn to_dense(&self, n: usize) -> DVector<Complex64> {
        let mut x = DVector::from_element(n, ZERO);
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoResult {
    pub x: DVector<Complex64>,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsityEstimate {
    pub k: usize,
    pub lambda: f64,
    pub lasso: LassoResult,
    /// Set when the estimate fell back to `k = 1`.
    pub warning: Option<String>,
}

fn column_norms(phi: &DMatrix<Complex64>) -> Vec<f64> {
    phi.column_iter().map(|c| c.norm()).collect()
}

fn select_among(phi: &DMatrix<Complex64>, norms: &[f64], r: &DVector<Complex64>, eligible: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, col) in phi.column_iter().enumerate() {
        if !eligible[i] || norms[i] == 0.0 {
            continue;
        }
        let score = col.dotc(r).norm() / norms[i];
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the column most correlated with `r`; ties go to the lowest index.
pub fn omp_select(phi: &DMatrix<Complex64>, r: &DVector<Complex64>) -> Result<usize> {
    if phi.nrows() != r.len() {
        return Err(Error::Shape(format!("{} rows vs residual of length {}", phi.nrows(), r.len())));
    }
    if r.iter().all(|v| *v == ZERO) {
        return Err(Error::ZeroResidual);
    }
    let eligible = vec![true; phi.ncols()];
    select_among(phi, &column_norms(phi), r, &eligible)
        .ok_or_else(|| Error::Invalid("dictionary has no nonzero column".into()))
}

/// Least squares on the columns `support`; `None` when the last column is dependent.
fn least_squares(phi: &DMatrix<Complex64>, support: &[usize], y: &DVector<Complex64>) -> Option<DVector<Complex64>> {
    let sub = phi.select_columns(support);
    let qr = sub.qr();
    let r = qr.r();
    let n = support.len();
    let scale = r.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(r[(n - 1, n - 1)].norm() > 1e-10 * scale) {
        return None;
    }
    let qty = qr.q().adjoint() * y;
    r.solve_upper_triangular(&qty)
}

/// Orthogonal matching pursuit with at most `k` atoms.
pub fn omp_solve(phi: &DMatrix<Complex64>, y: &DVector<Complex64>, k: usize) -> Result<SparseSolution> {
    let (m, n) = phi.shape();
    if m != y.len() {
        return Err(Error::Shape(format!("{m} rows vs right-hand side of length {}", y.len())));
    }
    if k < 1 || k > m.min(n) {
        return Err(Error::Invalid(format!("sparsity {k} outside 1..={}", m.min(n))));
    }
    let y_norm = y.norm();
    let mut sol = SparseSolution {
        support: Vec::new(),
        values: Vec::new(),
        residual_norm: y_norm,
        residual_history: vec![y_norm],
    };
    if y_norm == 0.0 {
        return Ok(sol);
    }
    let norms = column_norms(phi);
    let mut eligible = vec![true; n];
    let mut residual = y.clone();
    while sol.support.len() < k {
        if sol.residual_norm < 1e-12 * y_norm {
            break;
        }
        let Some(i) = select_among(phi, &norms, &residual, &eligible) else {
            break;
        };
        eligible[i] = false;
        sol.support.push(i);
        match least_squares(phi, &sol.support, y) {
            Some(x) => {
                residual = y - phi.select_columns(&sol.support) * &x;
                sol.values = x.iter().copied().collect();
                sol.residual_norm = residual.norm();
                sol.residual_history.push(sol.residual_norm);
            }
            None => {
                sol.support.pop();
            }
        }
    }
    Ok(sol)
}

/// `rho * max(1 - lambda / |rho|, 0)`.
pub fn soft_threshold(rho: Complex64, lambda: f64) -> Complex64 {
    let mag = rho.norm();
    if mag <= lambda {
        ZERO
    } else {
        rho * (1.0 - lambda / mag)
    }
}

/// `max_i |phi_i^H y|`, the smallest penalty giving the all-zero LASSO solution.
pub fn lambda_max(phi: &DMatrix<Complex64>, y: &DVector<Complex64>) -> f64 {
    phi.column_iter().map(|c| c.dotc(y).norm()).fold(0.0, f64::max)
}

/// Cyclic coordinate descent for `0.5 ||y - phi x||^2 + lambda ||x||_1`.
pub fn lasso_solve(phi: &DMatrix<Complex64>, y: &DVector<Complex64>, lambda: f64) -> Result<LassoResult> {
    lasso_solve_with(phi, y, lambda, 10_000)
}

pub fn lasso_solve_with(
    phi: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
    lambda: f64,
    max_sweeps: usize,
) -> Result<LassoResult> {
    let (m, n) = phi.shape();
    if m != y.len() {
        return Err(Error::Shape(format!("{m} rows vs right-hand side of length {}", y.len())));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    let norms2: Vec<f64> = phi.column_iter().map(|c| c.norm_squared()).collect();
    let mut x = DVector::from_element(n, ZERO);
    let mut residual = y.clone();
    for sweep in 1..=max_sweeps {
        let mut max_change: f64 = 0.0;
        for i in 0..n {
            if norms2[i] == 0.0 {
                continue;
            }
            let col = phi.column(i);
            let rho = col.dotc(&residual) + x[i] * norms2[i];
            let new = soft_threshold(rho, lambda) / norms2[i];
            let delta = new - x[i];
            if delta != ZERO {
                residual.axpy(-delta, &col, Complex64::new(1.0, 0.0));
                x[i] = new;
                max_change = max_change.max(delta.norm());
            }
        }
        let x_inf = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max_change < 1e-8 * (1.0 + x_inf) {
            return Ok(LassoResult { x, sweeps: sweep, converged: true });
        }
    }
    log::warn!("coordinate descent stopped after {max_sweeps} sweeps without converging");
    Ok(LassoResult { x, sweeps: max_sweeps, converged: false })
}

/// Number of significant LASSO coefficients at `lambda = ratio * lambda_max`.
pub fn estimate_sparsity(
    d_mat: &DMatrix<Complex64>,
    d_vec: &DVector<Complex64>,
    lambda_ratio: f64,
) -> Result<SparsityEstimate> {
    if !(lambda_ratio > 0.0 && lambda_ratio < 1.0) {
        return Err(Error::Invalid(format!("lambda ratio must lie in (0, 1), got {lambda_ratio}")));
    }
    let lambda = lambda_ratio * lambda_max(d_mat, d_vec);
    let lasso = lasso_solve(d_mat, d_vec, lambda)?;
    let x_inf = lasso.x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let count = lasso.x.iter().filter(|v| v.norm() > 1e-8 * x_inf).count();
    let (k, warning) = if count == 0 {
        let msg = "LASSO returned an all-zero solution; using sparsity 1".to_string();
        log::warn!("{msg}");
        (1, Some(msg))
    } else {
        (count, None)
    };
    Ok(SparsityEstimate { k, lambda, lasso, warning })
}
