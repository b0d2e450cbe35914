//! Residue estimation, re-synthesis and mode comparison.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frf::{FrequencyGrid, FrfSet, ModalModel, Mode, continuous_pole, synthesize_frf};
use crate::lscf::CharPolynomial;
use crate::roots::eval_with_derivative;

const RIDGE_COND_LIMIT: f64 = 1e12;

/// Pairwise MAC values, rows indexing the first shape set.
#[derive(Clone, Debug, PartialEq)]
pub struct MacMatrix {
    pub values: DMatrix<f64>,
}

/// Real least-squares basis for one output: columns `(Re R_r, Im R_r)` per mode,
/// rows `(Re, Im)` per line.
fn residue_basis(frf: &FrfSet, lambdas: &[Complex64], o: usize) -> DMatrix<f64> {
    let n_f = frf.n_lines();
    let mut a = DMatrix::zeros(2 * n_f, 2 * lambdas.len());
    for (k, w) in frf.grid().omegas().enumerate() {
        let jw = Complex64::new(0.0, w);
        let wt = frf.weight(o, k);
        for (r, lam) in lambdas.iter().enumerate() {
            let p = 1.0 / (jw - lam);
            let q = 1.0 / (jw - lam.conj());
            let u = (p + q) * wt;
            let v = (p - q) * Complex64::new(0.0, wt);
            a[(2 * k, 2 * r)] = u.re;
            a[(2 * k + 1, 2 * r)] = u.im;
            a[(2 * k, 2 * r + 1)] = v.re;
            a[(2 * k + 1, 2 * r + 1)] = v.im;
        }
    }
    a
}

fn solve_real_ls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = a.transpose() * a;
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max > 0.0 && min > max / RIDGE_COND_LIMIT {
        let qr = a.clone().qr();
        if let Some(x) = qr.r().solve_upper_triangular(&(qr.q().transpose() * b)) {
            return Ok(x);
        }
    }
    let ridge = 1e-10 * gram.trace();
    log::warn!("residue basis is ill-conditioned (eigenvalue ratio {:.3e}); adding ridge {ridge:.3e}", min / max);
    let regularized = gram + DMatrix::identity(a.ncols(), a.ncols()) * ridge;
    regularized
        .cholesky()
        .map(|c| c.solve(&(a.transpose() * b)))
        .ok_or_else(|| Error::Invalid("residue basis is degenerate".into()))
}

/// Least-squares residues for fixed poles `(f_hz, zeta)`, one solve per output.
pub fn estimate_mode_shapes(frf: &FrfSet, poles: &[(f64, f64)]) -> Result<ModalModel> {
    if poles.is_empty() {
        return Err(Error::Invalid("at least one pole is required".into()));
    }
    let (f_min, f_max) = (frf.grid().f_min(), frf.grid().f_max());
    for (index, &(f, zeta)) in poles.iter().enumerate() {
        if !(f >= f_min && f <= f_max) {
            return Err(Error::Invalid(format!("pole {index} at {f} Hz lies outside [{f_min}, {f_max}]")));
        }
        if zeta >= 1.0 {
            return Err(Error::Overdamped { index, zeta });
        }
        if !(zeta > 0.0) {
            return Err(Error::Invalid(format!("pole {index} has non-positive damping {zeta}")));
        }
    }
    let lambdas: Vec<Complex64> = poles.iter().map(|&(f, z)| continuous_pole(f, z)).collect();
    let shared = frf.weights().is_none_or(|w| w.nrows() == 1);
    let shared_basis = shared.then(|| residue_basis(frf, &lambdas, 0));

    let per_output: Vec<Result<Vec<Complex64>>> = (0..frf.n_outputs())
        .into_par_iter()
        .map(|o| {
            let own;
            let a = match &shared_basis {
                Some(a) => a,
                None => {
                    own = residue_basis(frf, &lambdas, o);
                    &own
                }
            };
            let h = frf.h().row(o);
            let b = DVector::from_fn(2 * frf.n_lines(), |i, _| {
                let v = h[i / 2] * frf.weight(o, i / 2);
                if i % 2 == 0 { v.re } else { v.im }
            });
            let x = solve_real_ls(a, &b)?;
            Ok((0..poles.len()).map(|r| Complex64::new(x[2 * r], x[2 * r + 1])).collect())
        })
        .collect();

    let mut residues = vec![Vec::with_capacity(frf.n_outputs()); poles.len()];
    for out in per_output {
        for (r, v) in out?.into_iter().enumerate() {
            residues[r].push(v);
        }
    }
    Ok(ModalModel::new(
        poles
            .iter()
            .zip(residues)
            .map(|(&(f_hz, zeta), residues)| Mode { f_hz, zeta, residues })
            .collect(),
    ))
}

/// Modal superposition of `model` on `grid`.
pub fn resynthesize(model: &ModalModel, grid: &FrequencyGrid) -> Result<FrfSet> {
    synthesize_frf(model, grid)
}

/// Mean of `|measured - fitted|^2` over all outputs and lines.
pub fn curve_fit_mse(measured: &FrfSet, fitted: &FrfSet) -> Result<f64> {
    if measured.grid() != fitted.grid() {
        return Err(Error::Shape("frequency grids differ".into()));
    }
    if measured.n_outputs() != fitted.n_outputs() {
        return Err(Error::Shape(format!(
            "{} measured outputs vs {} fitted",
            measured.n_outputs(),
            fitted.n_outputs()
        )));
    }
    let total: f64 = measured.h().iter().zip(fitted.h().iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(total / measured.h().len() as f64)
}

/// Residue vectors as columns, outputs as rows.
pub fn shape_matrix(model: &ModalModel) -> DMatrix<Complex64> {
    let n_o = model.n_outputs();
    DMatrix::from_fn(n_o, model.modes.len(), |o, r| {
        model.modes[r].residues.get(o).copied().unwrap_or_default()
    })
}

/// `|a^H b|^2 / ((a^H a)(b^H b))` for every column pair.
pub fn mac(shapes_a: &DMatrix<Complex64>, shapes_b: &DMatrix<Complex64>) -> Result<MacMatrix> {
    if shapes_a.nrows() != shapes_b.nrows() {
        return Err(Error::Shape(format!(
            "mode shapes have {} and {} outputs",
            shapes_a.nrows(),
            shapes_b.nrows()
        )));
    }
    let energy = |m: &DMatrix<Complex64>, offset: usize| -> Result<Vec<f64>> {
        m.column_iter()
            .enumerate()
            .map(|(j, c)| {
                let e = c.norm_squared();
                if e > 0.0 { Ok(e) } else { Err(Error::ZeroVector(j + offset)) }
            })
            .collect()
    };
    let ea = energy(shapes_a, 0)?;
    let eb = energy(shapes_b, shapes_a.ncols())?;
    let values = DMatrix::from_fn(shapes_a.ncols(), shapes_b.ncols(), |i, j| {
        let cross = shapes_a.column(i).dotc(&shapes_b.column(j)).norm_sqr();
        (cross / (ea[i] * eb[j])).clamp(0.0, 1.0)
    });
    Ok(MacMatrix { values })
}

/// One row of a mode-by-mode comparison; `None` marks an unmatched side.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub f_a_hz: Option<f64>,
    pub f_b_hz: Option<f64>,
    /// `100 (f_b - f_a) / f_a`.
    pub f_err_pct: Option<f64>,
    pub zeta_a: Option<f64>,
    pub zeta_b: Option<f64>,
    pub zeta_err_pct: Option<f64>,
    pub mac: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeComparison {
    pub rows: Vec<ComparisonRow>,
    pub mac: MacMatrix,
}

impl ModeComparison {
    pub fn unmatched(&self) -> usize {
        self.rows.iter().filter(|r| r.a.is_none() || r.b.is_none()).count()
    }
}

/// Pairs modes one-to-one by closest relative frequency and reports
/// percent errors of `b` against `a` together with the full MAC matrix.
pub fn compare_modes(a: &ModalModel, b: &ModalModel) -> Result<ModeComparison> {
    let mac_values = mac(&shape_matrix(a), &shape_matrix(b))?;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, ma) in a.modes.iter().enumerate() {
        for (j, mb) in b.modes.iter().enumerate() {
            candidates.push(((mb.f_hz - ma.f_hz).abs() / ma.f_hz, i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut pair_of_a = vec![None; a.modes.len()];
    let mut b_used = vec![false; b.modes.len()];
    for (_, i, j) in candidates {
        if pair_of_a[i].is_none() && !b_used[j] {
            pair_of_a[i] = Some(j);
            b_used[j] = true;
        }
    }
    let mut rows: Vec<ComparisonRow> = pair_of_a
        .iter()
        .enumerate()
        .map(|(i, pj)| {
            let ma = &a.modes[i];
            let mb = pj.map(|j| &b.modes[j]);
            ComparisonRow {
                a: Some(i),
                b: *pj,
                f_a_hz: Some(ma.f_hz),
                f_b_hz: mb.map(|m| m.f_hz),
                f_err_pct: mb.map(|m| 100.0 * (m.f_hz - ma.f_hz) / ma.f_hz),
                zeta_a: Some(ma.zeta),
                zeta_b: mb.map(|m| m.zeta),
                zeta_err_pct: mb.map(|m| 100.0 * (m.zeta - ma.zeta) / ma.zeta),
                mac: pj.map(|j| mac_values.values[(i, j)]),
            }
        })
        .collect();
    for (j, used) in b_used.iter().enumerate() {
        if !used {
            rows.push(ComparisonRow {
                a: None,
                b: Some(j),
                f_a_hz: None,
                f_b_hz: Some(b.modes[j].f_hz),
                f_err_pct: None,
                zeta_a: None,
                zeta_b: Some(b.modes[j].zeta),
                zeta_err_pct: None,
                mac: None,
            });
        }
    }
    Ok(ModeComparison { rows, mac: mac_values })
}

/// First-order change of the damping ratio of root `z_r` when the
/// coefficients of `a` move by `delta_a`.
pub fn damping_sensitivity(a: &CharPolynomial, delta_a: &[Complex64], z_r: Complex64, ts: f64) -> Result<f64> {
    let coeffs = a.coeffs();
    if delta_a.len() > coeffs.len() {
        return Err(Error::Shape(format!(
            "{} coefficient perturbations for a polynomial with {} coefficients",
            delta_a.len(),
            coeffs.len()
        )));
    }
    if !(ts > 0.0) {
        return Err(Error::Invalid(format!("sampling period must be > 0, got {ts}")));
    }
    if z_r.norm() == 0.0 {
        return Err(Error::ZeroRoot);
    }
    let (_, deriv) = eval_with_derivative(coeffs, z_r);
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c.norm() * z_r.norm().powi(i as i32 - 1))
        .sum();
    if deriv.norm() <= f64::max(1e-12, 1e-8 * scale) {
        return Err(Error::NearMultipleRoot {
            root: format!("{z_r}"),
            derivative: deriv.norm(),
        });
    }
    let (delta_poly, _) = eval_with_derivative(delta_a, z_r);
    let dz = -delta_poly / deriv;

    let lambda = -z_r.ln() / ts;
    let dlambda = -dz / (z_r * ts);
    let r3 = lambda.norm().powi(3);
    let d_re = -lambda.im * lambda.im / r3;
    let d_im = lambda.re * lambda.im / r3;
    Ok(d_re * dlambda.re + d_im * dlambda.im)
}
