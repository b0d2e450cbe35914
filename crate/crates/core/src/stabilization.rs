//! Order sweeps, stability diagrams and mode extraction.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frf::FrfSet;
use crate::lscf::{CharPolynomial, NormalCache, assemble_normal_cache, solve_order_dense};
use crate::roots::{Pole, dedup_degenerate, pole_from_root, poly_roots};
use crate::sparse::{estimate_sparsity, omp_solve};

pub const DEFAULT_THRESHOLD: f64 = 0.01;
pub const DEFAULT_LAMBDA_RATIO: f64 = 3e-4;
pub const DEFAULT_MIN_STREAK: usize = 10;
const DEDUP_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Conventional,
    Omp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Conventional => "conventional",
            Method::Omp => "omp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" | "conv" | "lscf" => Ok(Method::Conventional),
            "omp" => Ok(Method::Omp),
            other => Err(Error::Invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// A stable in-band pole on the diagram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagramPole {
    pub pole: Pole,
    pub consistent: bool,
}

/// Everything computed at one model order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderRow {
    pub order: usize,
    pub poly: CharPolynomial,
    /// All poles after dropping roots at the origin and duplicates.
    pub all_poles: Vec<Pole>,
    pub entries: Vec<DiagramPole>,
    pub zero_roots: usize,
    pub duplicates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityDiagram {
    pub method: Method,
    pub threshold_rel: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub rows: Vec<OrderRow>,
    /// Orders that produced no row, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Sparsity used by OMP; `None` for the conventional sweep.
    pub sparsity: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoleStats {
    pub n_stable: usize,
    pub n_unstable: usize,
}

/// A physical mode read off the diagram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractedMode {
    pub f_hz: f64,
    pub zeta: f64,
    pub z: Complex64,
    /// Order the representative pole was taken from.
    pub order: usize,
    pub streak: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub threshold_rel: f64,
    pub lambda_ratio: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            threshold_rel: DEFAULT_THRESHOLD,
            lambda_ratio: DEFAULT_LAMBDA_RATIO,
        }
    }
}

impl StabilityDiagram {
    pub fn stats(&self) -> PoleStats {
        pole_stats(self)
    }

    /// Stable in-band poles with no lower-order match.
    pub fn spurious_count(&self) -> usize {
        self.rows.iter().flat_map(|r| &r.entries).filter(|e| !e.consistent).count()
    }

    pub fn consistent_count(&self) -> usize {
        self.rows.iter().flat_map(|r| &r.entries).filter(|e| e.consistent).count()
    }

    pub fn max_order(&self) -> usize {
        self.rows.iter().map(|r| r.order).max().unwrap_or(0)
    }
}

fn build_row(poly: CharPolynomial, order: usize, ts: f64, f_min: f64, f_max: f64) -> Result<OrderRow> {
    let roots = poly_roots(poly.coeffs())?;
    let nonzero: Vec<Complex64> = roots.into_iter().filter(|z| z.norm() > 0.0).collect();
    let zero_roots = order - nonzero.len();
    let poles = nonzero.into_iter().map(|z| pole_from_root(z, ts)).collect::<Result<Vec<_>>>()?;
    let (all_poles, duplicates) = dedup_degenerate(&poles, DEDUP_REL_TOL);
    let entries = all_poles
        .iter()
        .filter(|p| p.stable && p.in_band(f_min, f_max))
        .map(|p| DiagramPole { pole: *p, consistent: false })
        .collect();
    Ok(OrderRow {
        order,
        poly,
        all_poles,
        entries,
        zero_roots,
        duplicates,
    })
}

/// Runs every order `1..=n_p` on an assembled cache.
pub fn sweep(cache: &NormalCache, frf: &FrfSet, method: Method, opts: SweepOptions) -> Result<StabilityDiagram> {
    if !(opts.threshold_rel > 0.0) {
        return Err(Error::Invalid(format!("threshold must be > 0, got {}", opts.threshold_rel)));
    }
    let n_p = cache.n_p;
    let sparsity = match method {
        Method::Conventional => None,
        Method::Omp => Some(estimate_sparsity(&cache.d_mat, &cache.d_vec, opts.lambda_ratio)?.k),
    };
    let (f_min, f_max, ts) = (frf.grid().f_min(), frf.grid().f_max(), cache.ts_seconds);

    let outcomes: Vec<(usize, Result<OrderRow>)> = (1..=n_p)
        .into_par_iter()
        .map(|i| {
            let poly = match sparsity {
                None => solve_order_dense(cache, i),
                Some(k) => {
                    let (d_i, rhs) = cache.subsystem(i);
                    omp_solve(&d_i, &rhs, k.min(i)).map(|s| CharPolynomial::from_lower(s.to_dense(i).as_slice()))
                }
            };
            (i, poly.and_then(|p| build_row(p, i, ts, f_min, f_max)))
        })
        .collect();

    let mut rows = Vec::with_capacity(n_p);
    let mut skipped = Vec::new();
    for (order, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("{method}: skipping order {order}: {e}");
                skipped.push((order, e.to_string()));
            }
        }
    }
    let mut diagram = StabilityDiagram {
        method,
        threshold_rel: opts.threshold_rel,
        f_min,
        f_max,
        rows,
        skipped,
        sparsity,
    };
    mark_consistency(&mut diagram);
    Ok(diagram)
}

/// Dense-solve sweep with default options.
pub fn run_conventional(frf: &FrfSet, n_p: usize) -> Result<StabilityDiagram> {
    let cache = assemble_normal_cache(frf, n_p)?;
    sweep(&cache, frf, Method::Conventional, SweepOptions::default())
}

/// OMP sweep with the sparsity estimated once at `lambda_ratio`.
pub fn run_omp(frf: &FrfSet, n_p: usize, lambda_ratio: f64) -> Result<StabilityDiagram> {
    let cache = assemble_normal_cache(frf, n_p)?;
    let opts = SweepOptions {
        lambda_ratio,
        ..SweepOptions::default()
    };
    sweep(&cache, frf, Method::Omp, opts)
}

/// Flags each diagram pole that matches a pole from a lower order within
/// the relative frequency threshold.
pub fn mark_consistency(diagram: &mut StabilityDiagram) {
    let th = diagram.threshold_rel;
    let mut lower: Vec<f64> = Vec::new();
    let mut orders: Vec<usize> = (0..diagram.rows.len()).collect();
    orders.sort_by_key(|&r| diagram.rows[r].order);
    let mut idx = 0;
    while idx < orders.len() {
        let order = diagram.rows[orders[idx]].order;
        let mut end = idx;
        while end < orders.len() && diagram.rows[orders[end]].order == order {
            end += 1;
        }
        for &r in &orders[idx..end] {
            for e in &mut diagram.rows[r].entries {
                let f = e.pole.f_hz;
                e.consistent = lower.iter().any(|&q| (f - q).abs() / q <= th);
            }
        }
        for &r in &orders[idx..end] {
            lower.extend(diagram.rows[r].entries.iter().map(|e| e.pole.f_hz));
        }
        idx = end;
    }
}

fn longest_run(orders: &mut Vec<usize>) -> usize {
    orders.sort_unstable();
    orders.dedup();
    let mut best = 0;
    let mut run = 0;
    for (k, &o) in orders.iter().enumerate() {
        run = if k > 0 && orders[k - 1] + 1 == o { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// Groups consistent poles into frequency clusters and keeps those present
/// over at least `min_streak` consecutive orders. Skipped orders do not
/// interrupt a run.
pub fn extract_modes(diagram: &StabilityDiagram, min_streak: usize) -> Vec<ExtractedMode> {
    let th = diagram.threshold_rel;
    let mut computed: Vec<usize> = diagram.rows.iter().map(|r| r.order).collect();
    computed.sort_unstable();
    computed.dedup();
    let rank = |order: usize| computed.binary_search(&order).unwrap_or(0);
    let mut points: Vec<(usize, Pole)> = diagram
        .rows
        .iter()
        .flat_map(|r| r.entries.iter().filter(|e| e.consistent).map(move |e| (r.order, e.pole)))
        .collect();
    points.sort_by(|a, b| a.1.f_hz.total_cmp(&b.1.f_hz).then(a.0.cmp(&b.0)));

    let mut clusters: Vec<Vec<(usize, Pole)>> = Vec::new();
    for p in points {
        match clusters.last_mut() {
            Some(c) if {
                let last = c.last().unwrap().1.f_hz;
                (p.1.f_hz - last).abs() / last <= th
            } =>
            {
                c.push(p)
            }
            _ => clusters.push(vec![p]),
        }
    }

    let mut modes: Vec<ExtractedMode> = clusters
        .into_iter()
        .filter_map(|c| {
            let streak = longest_run(&mut c.iter().map(|(o, _)| rank(*o)).collect());
            if streak < min_streak.max(1) {
                return None;
            }
            let top = c.iter().map(|(o, _)| *o).max()?;
            let mean = c.iter().map(|(_, p)| p.f_hz).sum::<f64>() / c.len() as f64;
            let (order, pole) = c
                .iter()
                .filter(|(o, _)| *o == top)
                .min_by(|a, b| (a.1.f_hz - mean).abs().total_cmp(&(b.1.f_hz - mean).abs()))?;
            Some(ExtractedMode {
                f_hz: pole.f_hz,
                zeta: pole.zeta,
                z: pole.z,
                order: *order,
                streak,
            })
        })
        .collect();
    modes.sort_by(|a, b| a.f_hz.total_cmp(&b.f_hz));
    modes
}

/// Stable and unstable counts over every pole of every order.
pub fn pole_stats(diagram: &StabilityDiagram) -> PoleStats {
    let (mut n_stable, mut n_unstable) = (0, 0);
    for p in diagram.rows.iter().flat_map(|r| &r.all_poles) {
        if p.stable {
            n_stable += 1;
        } else {
            n_unstable += 1;
        }
    }
    PoleStats { n_stable, n_unstable }
}
