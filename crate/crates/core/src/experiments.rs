//! Root placement of random polynomials with few dominant coefficients.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::roots::poly_roots;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityStudyResult {
    pub nonzero_count: usize,
    pub trials: usize,
    pub pct_inside_mean: f64,
    pub pct_inside_std: f64,
}

/// Random monic polynomial of `degree` keeping the `nonzero` largest lower
/// coefficients; real and imaginary parts are uniform on `(-half_width, half_width)`.
pub fn random_sparse_coeffs<R: Rng>(rng: &mut R, degree: usize, nonzero: usize, half_width: f64) -> Vec<Complex64> {
    let mut coeffs: Vec<Complex64> = (0..degree)
        .map(|_| {
            Complex64::new(
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
            )
        })
        .collect();
    let mut order: Vec<usize> = (0..degree).collect();
    order.sort_by(|&i, &j| coeffs[j].norm().total_cmp(&coeffs[i].norm()).then(i.cmp(&j)));
    for &i in &order[nonzero.min(degree)..] {
        coeffs[i] = Complex64::new(0.0, 0.0);
    }
    coeffs.push(Complex64::new(1.0, 0.0));
    coeffs
}

fn check_trial_args(degree: usize, nonzero: usize, half_width: f64) -> Result<()> {
    if degree < 1 || nonzero < 1 || nonzero > degree {
        return Err(Error::Invalid(format!(
            "need 1 <= nonzero <= degree, got nonzero {nonzero} and degree {degree}"
        )));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::Invalid(format!("coefficient half-width must be > 0, got {half_width}")));
    }
    Ok(())
}

/// Roots of one random sparse polynomial; roots at the origin are included.
pub fn trial_roots(degree: usize, nonzero: usize, half_width: f64, seed: u64) -> Result<Vec<Complex64>> {
    check_trial_args(degree, nonzero, half_width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    poly_roots(&random_sparse_coeffs(&mut rng, degree, nonzero, half_width))
}

/// Fraction of roots strictly inside the unit circle.
pub fn random_sparse_poly_trial(degree: usize, nonzero: usize, seed: u64) -> Result<f64> {
    sparse_poly_trial_with(degree, nonzero, 1.0, seed)
}

pub fn sparse_poly_trial_with(degree: usize, nonzero: usize, half_width: f64, seed: u64) -> Result<f64> {
    let roots = trial_roots(degree, nonzero, half_width, seed)?;
    Ok(roots.iter().filter(|z| z.norm() < 1.0).count() as f64 / degree as f64)
}

/// Seed of trial `t` for count index `c`, decorrelated by a splitmix step.
fn trial_seed(seed: u64, c: usize, t: usize) -> u64 {
    let mut z = seed ^ ((c as u64) << 40) ^ (t as u64);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_sparsity_study(degree: usize, counts: &[usize], trials: usize, seed: u64) -> Result<Vec<SparsityStudyResult>> {
    run_sparsity_study_with(degree, counts, trials, seed, 1.0)
}

/// Mean and population standard deviation of the inside percentage per count.
pub fn run_sparsity_study_with(
    degree: usize,
    counts: &[usize],
    trials: usize,
    seed: u64,
    half_width: f64,
) -> Result<Vec<SparsityStudyResult>> {
    if trials < 1 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    if trials < 100 {
        log::warn!("{trials} trials per count is too few for stable statistics");
    }
    counts
        .iter()
        .enumerate()
        .map(|(c, &nonzero)| {
            check_trial_args(degree, nonzero, half_width)?;
            let pct: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| sparse_poly_trial_with(degree, nonzero, half_width, trial_seed(seed, c, t)).map(|f| 100.0 * f))
                .collect::<Result<_>>()?;
            let mean = pct.iter().sum::<f64>() / trials as f64;
            let var = pct.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / trials as f64;
            Ok(SparsityStudyResult {
                nonzero_count: nonzero,
                trials,
                pct_inside_mean: mean,
                pct_inside_std: var.sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_case_matches_single_root() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a0 = random_sparse_coeffs(&mut rng, 1, 1, 1.0)[0];
            let expected = if a0.norm() < 1.0 { 1.0 } else { 0.0 };
            assert_eq!(random_sparse_poly_trial(1, 1, seed).unwrap(), expected);
        }
    }

    #[test]
    fn keeps_dominant_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let coeffs = random_sparse_coeffs(&mut rng, 50, 7, 1.0);
        let kept: Vec<f64> = coeffs[..50].iter().filter(|c| c.norm() > 0.0).map(|c| c.norm()).collect();
        assert_eq!(kept.len(), 7);
        let smallest_kept = kept.iter().copied().fold(f64::INFINITY, f64::min);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dense = random_sparse_coeffs(&mut rng, 50, 50, 1.0);
        let above = dense[..50].iter().filter(|c| c.norm() >= smallest_kept).count();
        assert_eq!(above, 7);
        assert_eq!(coeffs[50], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn every_trial_has_degree_roots() {
        for nonzero in [1, 3, 20] {
            assert_eq!(trial_roots(20, nonzero, 1.0, 9).unwrap().len(), 20);
        }
    }

    #[test]
    fn single_trial_has_zero_spread() {
        let res = run_sparsity_study(10, &[3], 1, 4).unwrap();
        assert_eq!(res[0].pct_inside_std, 0.0);
        assert_eq!(res[0].trials, 1);
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(random_sparse_poly_trial(10, 0, 1).is_err());
        assert!(random_sparse_poly_trial(10, 11, 1).is_err());
        assert!(run_sparsity_study(10, &[3], 0, 1).is_err());
    }

    #[test]
    fn study_is_seeded() {
        let a = run_sparsity_study(12, &[12, 4], 20, 8).unwrap();
        let b = run_sparsity_study(12, &[12, 4], 20, 8).unwrap();
        assert_eq!(a, b);
    }
}
