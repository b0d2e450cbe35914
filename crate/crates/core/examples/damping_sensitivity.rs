//! First-order damping change of each characteristic root under a
//! coefficient perturbation, checked against a finite difference.

use modalsparse::lscf::CharPolynomial;
use modalsparse::modal::damping_sensitivity;
use modalsparse::roots::{pole_from_root, poly_from_roots, poly_roots};
use num_complex::Complex64;

fn main() -> modalsparse::Result<()> {
    let ts = 1.0 / 6000.0;
    let roots: Vec<Complex64> = (0..6)
        .map(|k| Complex64::from_polar(1.02 + 0.01 * k as f64, -2.5 + 0.9 * k as f64))
        .collect();
    let coeffs = poly_from_roots(&roots);
    let poly = CharPolynomial::from_lower(&coeffs[..6]);
    let delta: Vec<Complex64> = (0..6).map(|k| Complex64::new(0.3 * k as f64 - 0.5, 0.2)).collect();

    let eps = 1e-7;
    let moved: Vec<Complex64> = coeffs.iter().enumerate().map(|(i, c)| if i < 6 { c + delta[i] * eps } else { *c }).collect();
    let moved_roots = poly_roots(&moved)?;
    for z in &roots {
        let p = pole_from_root(*z, ts)?;
        let predicted = damping_sensitivity(&poly, &delta, *z, ts)?;
        let near = moved_roots.iter().min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm())).unwrap();
        let fd = (pole_from_root(*near, ts)?.zeta - p.zeta) / eps;
        println!("{:8.1} Hz  zeta {:.5}  d zeta {predicted:+.5e}  finite difference {fd:+.5e}", p.f_hz, p.zeta);
    }
    Ok(())
}
