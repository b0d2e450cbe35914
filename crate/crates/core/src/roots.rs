//! Polynomial roots through the companion matrix and the map from discrete
//! roots `z = exp(-lambda Ts)` to continuous poles.
//!
//! Coefficients are always ordered from the constant term upward; the last
//! entry is the monic top coefficient.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const NEWTON_POLISH_STEPS: usize = 5;

/// All roots of the monic polynomial `coeffs[0] + coeffs[1] z + ... + z^n`.
///
/// Low-order coefficients that are exactly zero contribute exact roots at
/// the origin; the remaining factor is solved as the eigenvalues of its
/// balanced companion matrix with a shifted complex QR iteration, followed by
/// a few Newton steps against the original polynomial.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    if coeffs.len() < 2 {
        return Err(Error::Invalid("a polynomial needs at least degree 1".into()));
    }
    let n = coeffs.len() - 1;
    let top = coeffs[n];
    if top != Complex64::new(1.0, 0.0) {
        return Err(Error::Invalid(format!("top coefficient must be exactly 1, got {top}")));
    }
    let zeros = coeffs.iter().take_while(|c| **c == Complex64::new(0.0, 0.0)).count();
    let reduced = &coeffs[zeros..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let m = reduced.len() - 1;
    match m {
        0 => {}
        1 => roots.push(-reduced[0]),
        _ => {
            let mut eig = companion_eigenvalues(reduced)?;
            for z in &mut eig {
                *z = newton_polish(reduced, *z);
            }
            roots.extend(eig);
        }
    }
    Ok(roots)
}

/// Horner evaluation of the polynomial and its derivative at `z`.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Monic coefficients (constant term first) of `prod (z - r)`.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

fn newton_polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval_with_derivative(coeffs, z);
    for _ in 0..NEWTON_POLISH_STEPS {
        let (_, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 || !dp.is_finite() {
            break;
        }
        let candidate = z - p / dp;
        let (pc, _) = eval_with_derivative(coeffs, candidate);
        // only accept steps that reduce the residual
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = candidate;
        p = pc;
    }
    z
}

/// Eigenvalues of the companion matrix of a monic polynomial of degree >= 2.
fn companion_eigenvalues(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    // Upper Hessenberg companion: ones on the subdiagonal, -c_i in the last column.
    let mut h = Hessenberg::zeros(n);
    for i in 1..n {
        h.set(i, i - 1, Complex64::new(1.0, 0.0));
    }
    for i in 0..n {
        h.set(i, n - 1, -coeffs[i]);
    }
    h.balance();
    h.eigenvalues()
}

/// Dense square matrix in column-major storage, kept upper Hessenberg.
struct Hessenberg {
    n: usize,
    a: Vec<Complex64>,
}

impl Hessenberg {
    fn zeros(n: usize) -> Self {
        Self { n, a: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[j * self.n + i]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[j * self.n + i] = v;
    }

    /// Diagonal similarity scaling (powers of two) so row and column norms
    /// are comparable. Preserves the Hessenberg structure.
    fn balance(&mut self) {
        let n = self.n;
        let radix = 2.0_f64;
        let radix2 = radix * radix;
        let mut converged = false;
        let mut sweeps = 0;
        while !converged && sweeps < 100 {
            converged = true;
            sweeps += 1;
            for i in 0..n {
                let mut c = 0.0;
                let mut r = 0.0;
                for j in 0..n {
                    if j != i {
                        c += l1(self.get(j, i));
                        r += l1(self.get(i, j));
                    }
                }
                if c == 0.0 || r == 0.0 {
                    continue;
                }
                let s = c + r;
                let mut f = 1.0;
                let mut g = r / radix;
                while c < g {
                    f *= radix;
                    c *= radix2;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= radix2;
                }
                if (c + r) / f < 0.95 * s {
                    converged = false;
                    let inv = 1.0 / f;
                    for j in 0..n {
                        let v = self.get(i, j) * inv;
                        self.set(i, j, v);
                    }
                    for j in 0..n {
                        let v = self.get(j, i) * f;
                        self.set(j, i, v);
                    }
                }
            }
        }
    }

    /// Single-shift complex QR on the Hessenberg matrix with Wilkinson shifts
    /// and exceptional shifts when progress stalls.
    fn eigenvalues(mut self) -> Result<Vec<Complex64>> {
        let n = self.n;
        let max_iterations = 100 * n;
        let mut eig = vec![Complex64::new(0.0, 0.0); n];
        let mut hi = n - 1;
        let mut total = 0usize;
        let mut since_deflation = 0usize;
        let mut cs: Vec<(f64, Complex64)> = vec![(0.0, Complex64::new(0.0, 0.0)); n];

        loop {
            if hi == 0 {
                eig[0] = self.get(0, 0);
                break;
            }
            // find the active block [lo, hi]
            let mut lo = hi;
            while lo > 0 {
                let sub = self.get(lo, lo - 1).norm();
                let diag = self.get(lo, lo).norm() + self.get(lo - 1, lo - 1).norm();
                let scale = if diag == 0.0 { 1.0 } else { diag };
                if sub <= f64::EPSILON * scale {
                    self.set(lo, lo - 1, Complex64::new(0.0, 0.0));
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                eig[hi] = self.get(hi, hi);
                hi -= 1;
                since_deflation = 0;
                continue;
            }
            if total >= max_iterations {
                return Err(Error::NoConvergence { degree: n, iterations: total });
            }
            total += 1;
            since_deflation += 1;

            let shift = if since_deflation.is_multiple_of(11) {
                // exceptional shift
                let t = self.get(hi, hi - 1).norm() + if hi >= 2 { self.get(hi - 1, hi - 2).norm() } else { 0.0 };
                self.get(hi, hi) + Complex64::new(0.75 * t, 0.4375 * t)
            } else {
                wilkinson_shift(self.get(hi - 1, hi - 1), self.get(hi - 1, hi), self.get(hi, hi - 1), self.get(hi, hi))
            };

            // QR step on the active block: H - s I = QR, H <- RQ + s I
            for k in lo..=hi {
                let v = self.get(k, k) - shift;
                self.set(k, k, v);
            }
            for k in lo..hi {
                let (c, s) = givens(self.get(k, k), self.get(k + 1, k));
                cs[k] = (c, s);
                // rows k, k+1 of the active columns
                for j in k..=hi {
                    let a = self.get(k, j);
                    let b = self.get(k + 1, j);
                    self.set(k, j, a * c + s * b);
                    self.set(k + 1, j, -s.conj() * a + b * c);
                }
            }
            for k in lo..hi {
                let (c, s) = cs[k];
                // columns k, k+1 of the active rows
                let last = (k + 2).min(hi);
                for i in lo..=last {
                    let a = self.get(i, k);
                    let b = self.get(i, k + 1);
                    self.set(i, k, a * c + b * s.conj());
                    self.set(i, k + 1, -a * s + b * c);
                }
            }
            for k in lo..=hi {
                let v = self.get(k, k) + shift;
                self.set(k, k, v);
            }
        }
        Ok(eig)
    }
}

#[inline]
fn l1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Rotation `[c s; -conj(s) c]` with real `c` that zeroes `b` against `a`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Discrete root paired with its continuous pole and modal quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub z: Complex64,
    pub lambda: Complex64,
    pub f_hz: f64,
    pub fd_hz: f64,
    pub zeta: f64,
    pub stable: bool,
}

impl Pole {
    /// True when the pole lies in `[f_min, f_max]` on the positive-frequency side.
    pub fn in_band(&self, f_min: f64, f_max: f64) -> bool {
        self.fd_hz > 0.0 && self.f_hz >= f_min && self.f_hz <= f_max
    }
}

/// `lambda = -ln(z) / Ts` on the principal branch; stable iff `zeta > 0`,
/// which for this convention means `|z| > 1`.
pub fn pole_from_root(z: Complex64, ts: f64) -> Result<Pole> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroRoot);
    }
    if !(ts > 0.0) {
        return Err(Error::Invalid(format!("sampling period must be > 0, got {ts}")));
    }
    let lambda = -z.ln() / ts;
    let mag = lambda.norm();
    let zeta = if mag == 0.0 { 0.0 } else { -lambda.re / mag };
    Ok(Pole {
        z,
        lambda,
        f_hz: mag / (2.0 * PI),
        fd_hz: lambda.im / (2.0 * PI),
        zeta,
        stable: zeta > 0.0,
    })
}

/// Collapses poles whose roots coincide within `rel_tol * max(1, |z|)`,
/// keeping the first occurrence. Returns the survivors and the number removed.
pub fn dedup_degenerate(poles: &[Pole], rel_tol: f64) -> (Vec<Pole>, usize) {
    let mut kept: Vec<Pole> = Vec::with_capacity(poles.len());
    for p in poles {
        let tol = rel_tol * p.z.norm().max(1.0);
        if !kept.iter().any(|q| (q.z - p.z).norm() <= tol) {
            kept.push(*p);
        }
    }
    let removed = poles.len() - kept.len();
    (kept, removed)
}
