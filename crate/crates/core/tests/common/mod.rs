#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Double-double real: `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn one() -> Self {
        Cdd { re: Dd { hi: 1.0, lo: 0.0 }, im: Dd::default() }
    }

    fn mul_c(self, r: Complex64) -> Cdd {
        Cdd {
            re: self.re.mul_f64(r.re).add(self.im.mul_f64(r.im).neg()),
            im: self.re.mul_f64(r.im).add(self.im.mul_f64(r.re)),
        }
    }

    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re.neg()), im: self.im.add(o.im.neg()) }
    }

    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}

/// Monic coefficients (constant first) of `prod (z - r)`, expanded in
/// double-double arithmetic and rounded once at the end.
pub fn expand_roots_accurate(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Cdd::one()];
    for r in roots {
        let mut next = vec![Cdd::default(); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] = next[i + 1].add(*c);
            next[i] = next[i].sub(c.mul_c(*r));
        }
        coeffs = next;
    }
    coeffs.into_iter().map(Cdd::to_c64).collect()
}

/// Roots spread around the unit circle: one per angular sector with jitter,
/// radius in `[1 - spread, 1 + spread]`, returned in shuffled order.
pub fn stratified_roots(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<Complex64> {
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 + rng.random_range(-0.3..0.3)) / n as f64;
            Complex64::from_polar(rng.random_range(1.0 - spread..1.0 + spread), theta)
        })
        .collect();
    roots.shuffle(rng);
    roots
}

/// Greedy nearest matching; returns the largest distance.
pub fn matched_error(mut found: Vec<Complex64>, truth: &[Complex64]) -> f64 {
    assert_eq!(found.len(), truth.len());
    let mut worst: f64 = 0.0;
    for t in truth {
        let (idx, d) = found
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - t).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        worst = worst.max(d);
        found.swap_remove(idx);
    }
    worst
}

/// The two-mode reference structure used across the pipeline tests.
pub fn reference_model() -> modalsparse::frf::ModalModel {
    use modalsparse::frf::{ModalModel, Mode};
    ModalModel::new(vec![
        Mode { f_hz: 1292.4, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
        Mode { f_hz: 1553.8, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
    ])
}

/// Reference FRF on `lines` points over 10..3000 Hz, noisy when `alpha > 0`.
pub fn reference_frf(lines: usize, alpha: f64, seed: u64) -> modalsparse::frf::FrfSet {
    use modalsparse::frf::{inject_noise, synthesize_frf, FrequencyGrid};
    let grid = FrequencyGrid::linspace(10.0, 3000.0, lines).unwrap();
    let clean = synthesize_frf(&reference_model(), &grid).unwrap();
    if alpha > 0.0 {
        inject_noise(&clean, alpha, seed).unwrap()
    } else {
        clean
    }
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_fn(n, |_, _| random_complex(rng))
}
