//! Frequency response data: grids, FRF matrices, modal models, analytic
//! synthesis by modal superposition and multiplicative noise injection.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Sampling period that maps `[0, f_max]` onto the upper half of the unit circle.
pub fn sampling_period(freqs_hz: &[f64]) -> Result<f64> {
    let f_max = freqs_hz
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))
        .ok_or_else(|| Error::Invalid("empty frequency grid".into()))?;
    if !(f_max > 0.0) {
        return Err(Error::Invalid(format!("highest frequency must be positive, got {f_max}")));
    }
    Ok(1.0 / (2.0 * f_max))
}

/// Ascending frequency lines (Hz) plus the sampling period used by the
/// discrete basis `exp(-j w Ts)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    freqs_hz: Vec<f64>,
    ts_seconds: f64,
}

impl FrequencyGrid {
    pub fn new(freqs_hz: Vec<f64>, ts_seconds: f64) -> Result<Self> {
        if freqs_hz.is_empty() {
            return Err(Error::Invalid("empty frequency grid".into()));
        }
        if let Some(k) = freqs_hz.iter().position(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::Invalid(format!(
                "frequency line {k} is {} Hz; all lines must be finite and > 0",
                freqs_hz[k]
            )));
        }
        if let Some(k) = freqs_hz.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(format!(
                "frequencies must be strictly increasing: line {} ({} Hz) follows {} Hz",
                k + 1,
                freqs_hz[k + 1],
                freqs_hz[k]
            )));
        }
        if !(ts_seconds > 0.0) || !ts_seconds.is_finite() {
            return Err(Error::Invalid(format!("sampling period must be > 0, got {ts_seconds}")));
        }
        Ok(Self { freqs_hz, ts_seconds })
    }

    /// Grid whose sampling period is derived with [`sampling_period`].
    pub fn from_freqs(freqs_hz: Vec<f64>) -> Result<Self> {
        let ts = sampling_period(&freqs_hz)?;
        Self::new(freqs_hz, ts)
    }

    /// `n` equally spaced lines from `f_start` to `f_stop` inclusive.
    pub fn linspace(f_start: f64, f_stop: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("a linear grid needs at least 2 lines, got {n}")));
        }
        let step = (f_stop - f_start) / (n - 1) as f64;
        let freqs = (0..n)
            .map(|k| if k == n - 1 { f_stop } else { f_start + step * k as f64 })
            .collect();
        Self::from_freqs(freqs)
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn ts_seconds(&self) -> f64 {
        self.ts_seconds
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    pub fn f_min(&self) -> f64 {
        self.freqs_hz[0]
    }

    pub fn f_max(&self) -> f64 {
        self.freqs_hz[self.freqs_hz.len() - 1]
    }

    /// Angular frequencies in rad/s.
    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        self.freqs_hz.iter().map(|f| 2.0 * PI * f)
    }
}

/// Complex FRF matrix (outputs x frequency lines) with optional weights.
///
/// Weights may hold one row per output or a single row that is shared by
/// every output.
#[derive(Clone, Debug, PartialEq)]
pub struct FrfSet {
    grid: FrequencyGrid,
    h: DMatrix<Complex64>,
    weights: Option<DMatrix<f64>>,
}

impl FrfSet {
    pub fn new(grid: FrequencyGrid, h: DMatrix<Complex64>, weights: Option<DMatrix<f64>>) -> Result<Self> {
        if h.ncols() != grid.len() {
            return Err(Error::Shape(format!(
                "FRF has {} frequency columns but the grid has {} lines",
                h.ncols(),
                grid.len()
            )));
        }
        if h.nrows() == 0 {
            return Err(Error::Shape("FRF needs at least one output".into()));
        }
        if let Some(w) = &weights {
            if w.ncols() != grid.len() || (w.nrows() != h.nrows() && w.nrows() != 1) {
                return Err(Error::Shape(format!(
                    "weights are {}x{}, expected {}x{} or 1x{}",
                    w.nrows(),
                    w.ncols(),
                    h.nrows(),
                    grid.len(),
                    grid.len()
                )));
            }
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Invalid("weights must be finite and non-negative".into()));
            }
        }
        Ok(Self { grid, h, weights })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn weights(&self) -> Option<&DMatrix<f64>> {
        self.weights.as_ref()
    }

    pub fn n_outputs(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_lines(&self) -> usize {
        self.h.ncols()
    }

    /// Weight of output `o` at line `k`; 1 when no weights were supplied.
    pub fn weight(&self, o: usize, k: usize) -> f64 {
        match &self.weights {
            None => 1.0,
            Some(w) if w.nrows() == 1 => w[(0, k)],
            Some(w) => w[(o, k)],
        }
    }

    /// Mean of |H_o| over outputs, per line. Used for diagram backdrops.
    pub fn mean_magnitude(&self) -> Vec<f64> {
        let n_o = self.n_outputs() as f64;
        (0..self.n_lines())
            .map(|k| self.h.column(k).iter().map(|v| v.norm()).sum::<f64>() / n_o)
            .collect()
    }
}

/// One structural mode: undamped natural frequency, damping ratio and the
/// complex residue seen at each output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub f_hz: f64,
    pub zeta: f64,
    pub residues: Vec<Complex64>,
}

impl Mode {
    /// Continuous pole `-zeta w + j w sqrt(1 - zeta^2)`.
    pub fn pole(&self) -> Complex64 {
        continuous_pole(self.f_hz, self.zeta)
    }
}

pub(crate) fn continuous_pole(f_hz: f64, zeta: f64) -> Complex64 {
    let w = 2.0 * PI * f_hz;
    Complex64::new(-zeta * w, w * (1.0 - zeta * zeta).sqrt())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModalModel {
    pub modes: Vec<Mode>,
}

impl ModalModel {
    pub fn new(modes: Vec<Mode>) -> Self {
        Self { modes }
    }

    /// Number of outputs implied by the residue vectors (at least 1).
    pub fn n_outputs(&self) -> usize {
        self.modes.first().map_or(1, |m| m.residues.len().max(1))
    }

    /// Checks frequencies, damping range and residue counts.
    pub fn validate(&self) -> Result<()> {
        let n_o = self.n_outputs();
        for (index, mode) in self.modes.iter().enumerate() {
            if !(mode.f_hz > 0.0) {
                return Err(Error::Invalid(format!("mode {index} has non-positive frequency {}", mode.f_hz)));
            }
            if mode.zeta >= 1.0 {
                return Err(Error::Overdamped { index, zeta: mode.zeta });
            }
            if !(mode.zeta > 0.0) {
                return Err(Error::Invalid(format!("mode {index} has non-positive damping {}", mode.zeta)));
            }
            if mode.residues.len() != n_o {
                return Err(Error::Shape(format!(
                    "mode {index} has {} residues, expected {n_o}",
                    mode.residues.len()
                )));
            }
        }
        Ok(())
    }

    /// Response of output `o` at angular frequency `omega` (may be negative).
    pub fn response(&self, o: usize, omega: f64) -> Complex64 {
        let jw = Complex64::new(0.0, omega);
        self.modes
            .iter()
            .map(|m| {
                let lambda = m.pole();
                let r = m.residues[o];
                r / (jw - lambda) + r.conj() / (jw - lambda.conj())
            })
            .sum()
    }
}

/// Evaluates the modal superposition on every grid line.
pub fn synthesize_frf(model: &ModalModel, grid: &FrequencyGrid) -> Result<FrfSet> {
    model.validate()?;
    let n_o = model.n_outputs();
    let mut h = DMatrix::from_element(n_o, grid.len(), Complex64::new(0.0, 0.0));
    if !model.modes.is_empty() {
        for (k, omega) in grid.omegas().enumerate() {
            for o in 0..n_o {
                h[(o, k)] = model.response(o, omega);
            }
        }
    }
    FrfSet::new(grid.clone(), h, None)
}

/// Multiplies every entry by `1 + alpha * sigma` with `sigma ~ N(0, 1)`
/// drawn independently per output and line from a seeded generator.
pub fn inject_noise(frf: &FrfSet, alpha: f64, seed: u64) -> Result<FrfSet> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Invalid(format!("noise level alpha must be >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(frf.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = frf.h.clone();
    for o in 0..h.nrows() {
        for k in 0..h.ncols() {
            let sigma: f64 = StandardNormal.sample(&mut rng);
            h[(o, k)] *= 1.0 + alpha * sigma;
        }
    }
    FrfSet::new(frf.grid.clone(), h, frf.weights.clone())
}
