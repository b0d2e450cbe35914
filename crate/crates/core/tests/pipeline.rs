use modalsparse::experiments::{run_sparsity_study, trial_roots};
use modalsparse::io::diagram_to_csv;
use modalsparse::lscf::assemble_normal_cache;
use modalsparse::sparse::estimate_sparsity;
use modalsparse::stabilization::{
    extract_modes, mark_consistency, pole_stats, run_conventional, run_omp, StabilityDiagram, DEFAULT_LAMBDA_RATIO,
    DEFAULT_MIN_STREAK,
};

mod common;

use common::reference_frf;

const TARGETS: [f64; 2] = [1292.4, 1553.8];

fn has_pole_near(diagram: &StabilityDiagram, order: usize, f: f64, tol: f64) -> Option<bool> {
    let row = diagram.rows.iter().find(|r| r.order == order)?;
    row.entries.iter().find(|e| (e.pole.f_hz - f).abs() / f <= tol).map(|e| e.consistent)
}

fn assert_witnessed(diagram: &StabilityDiagram) {
    for row in &diagram.rows {
        for e in row.entries.iter().filter(|e| e.consistent) {
            let witness = diagram.rows.iter().filter(|r| r.order < row.order).any(|r| {
                r.entries
                    .iter()
                    .any(|w| (e.pole.f_hz - w.pole.f_hz).abs() / w.pole.f_hz <= diagram.threshold_rel)
            });
            assert!(witness, "order {} pole at {} has no lower-order witness", row.order, e.pole.f_hz);
        }
    }
}

#[test]
fn noiseless_conventional_tracks_both_modes() {
    let frf = reference_frf(2048, 0.0, 0);
    let diagram = run_conventional(&frf, 30).unwrap();
    for row in diagram.rows.iter().filter(|r| r.order >= 4) {
        for f in TARGETS {
            let consistent = has_pole_near(&diagram, row.order, f, 1e-3);
            assert!(consistent.is_some(), "order {} lacks {f}", row.order);
            if row.order >= 5 {
                assert_eq!(consistent, Some(true), "order {} pole at {f}", row.order);
            }
        }
    }
    assert_witnessed(&diagram);
    let modes = extract_modes(&diagram, DEFAULT_MIN_STREAK);
    assert_eq!(modes.len(), 2);
    for (m, f) in modes.iter().zip(TARGETS) {
        assert!((m.f_hz - f).abs() / f < 1e-3);
        assert!((m.zeta - 0.01).abs() / 0.01 < 0.05);
    }
}

#[test]
fn noiseless_omp_recovers_both_modes_with_fewer_spurious() {
    let frf = reference_frf(2048, 0.0, 0);
    let conv = run_conventional(&frf, 30).unwrap();
    let omp = run_omp(&frf, 30, DEFAULT_LAMBDA_RATIO).unwrap();
    assert_witnessed(&omp);
    let modes = extract_modes(&omp, DEFAULT_MIN_STREAK);
    assert_eq!(modes.len(), 2);
    for (m, f) in modes.iter().zip(TARGETS) {
        assert!((m.f_hz - f).abs() / f < 1e-3);
    }
    assert!(omp.spurious_count() < conv.spurious_count());
}

#[test]
fn sparsity_estimate_covers_two_pole_pairs() {
    let frf = reference_frf(2048, 0.0, 0);
    let cache = assemble_normal_cache(&frf, 30).unwrap();
    let est = estimate_sparsity(&cache.d_mat, &cache.d_vec, DEFAULT_LAMBDA_RATIO).unwrap();
    assert!(est.k >= 4, "k = {}", est.k);
}

#[test]
fn order_one_sweep_has_nothing_consistent() {
    let frf = reference_frf(512, 0.0, 0);
    let diagram = run_conventional(&frf, 1).unwrap();
    assert!(diagram.rows.len() <= 1);
    assert_eq!(diagram.consistent_count(), 0);
    let omp = run_omp(&frf, 1, DEFAULT_LAMBDA_RATIO).unwrap();
    assert_eq!(omp.consistent_count(), 0);
}

#[test]
fn consistency_marking_is_idempotent() {
    let frf = reference_frf(1024, 0.05, 3);
    let mut diagram = run_conventional(&frf, 20).unwrap();
    let before = diagram_to_csv(&diagram);
    mark_consistency(&mut diagram);
    assert_eq!(diagram_to_csv(&diagram), before);
}

#[test]
fn noisy_direction_property() {
    let frf = reference_frf(2048, 0.05, 1);
    let conv = run_conventional(&frf, 30).unwrap();
    let omp = run_omp(&frf, 30, DEFAULT_LAMBDA_RATIO).unwrap();
    let (c, o) = (pole_stats(&conv), pole_stats(&omp));
    assert!(o.n_stable < c.n_stable, "{o:?} vs {c:?}");
    assert!(o.n_unstable > c.n_unstable, "{o:?} vs {c:?}");
    assert!(omp.spurious_count() < conv.spurious_count());
    assert_witnessed(&omp);
    assert_witnessed(&conv);
}

#[test]
fn diagrams_do_not_depend_on_thread_count() {
    let frf = reference_frf(1024, 0.1, 9);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                diagram_to_csv(&run_conventional(&frf, 24).unwrap()),
                diagram_to_csv(&run_omp(&frf, 24, DEFAULT_LAMBDA_RATIO).unwrap()),
            )
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
}

#[test]
fn random_sparse_roots_hug_the_unit_circle() {
    for nonzero in [100, 30, 5] {
        let mut mags: Vec<f64> = trial_roots(100, nonzero, 1.0, 17).unwrap().iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        let median = mags[mags.len() / 2];
        assert!((0.9..=1.1).contains(&median), "median {median} at {nonzero}");
    }
}

#[test]
fn sparsity_study_is_seeded_and_thread_independent() {
    let a = run_sparsity_study(40, &[40, 10, 3], 50, 5).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_sparsity_study(40, &[40, 10, 3], 50, 5).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, run_sparsity_study(40, &[40, 10, 3], 50, 6).unwrap());
    for r in &a {
        assert!((0.0..=100.0).contains(&r.pct_inside_mean));
        assert!(r.pct_inside_std >= 0.0);
    }
}
