//! Residues for identified poles, re-synthesis error and MAC against the truth.

use modalsparse::frf::{inject_noise, synthesize_frf, FrequencyGrid, ModalModel, Mode};
use modalsparse::modal::{compare_modes, curve_fit_mse, estimate_mode_shapes, resynthesize};
use modalsparse::stabilization::{extract_modes, run_omp, DEFAULT_LAMBDA_RATIO, DEFAULT_MIN_STREAK};
use num_complex::Complex64;

fn main() -> modalsparse::Result<()> {
    let c = Complex64::new;
    let truth = ModalModel::new(vec![
        Mode { f_hz: 640.0, zeta: 0.02, residues: vec![c(0.0, -1.0), c(0.0, -0.6), c(0.0, 0.3)] },
        Mode { f_hz: 1292.4, zeta: 0.01, residues: vec![c(0.0, -0.5), c(0.0, 0.8), c(0.0, 0.9)] },
        Mode { f_hz: 2100.0, zeta: 0.015, residues: vec![c(0.0, 0.7), c(0.0, -0.2), c(0.0, 1.0)] },
    ]);
    let grid = FrequencyGrid::linspace(10.0, 3000.0, 2048)?;
    let frf = inject_noise(&synthesize_frf(&truth, &grid)?, 0.02, 5)?;

    let diagram = run_omp(&frf, 30, DEFAULT_LAMBDA_RATIO)?;
    let poles: Vec<(f64, f64)> = extract_modes(&diagram, DEFAULT_MIN_STREAK).iter().map(|m| (m.f_hz, m.zeta)).collect();
    if poles.is_empty() {
        println!("no modes extracted");
        return Ok(());
    }
    let model = estimate_mode_shapes(&frf, &poles)?;
    let fitted = resynthesize(&model, &grid)?;
    println!("{} modes, curve-fit mse {:.3e}", model.modes.len(), curve_fit_mse(&frf, &fitted)?);

    let cmp = compare_modes(&truth, &model)?;
    for row in &cmp.rows {
        match (row.f_a_hz, row.f_b_hz, row.mac) {
            (Some(fa), Some(fb), Some(m)) => println!(
                "{fa:>7.1} Hz -> {fb:>8.2} Hz ({:+.3}%), zeta {:+.1}%, MAC {m:.4}",
                row.f_err_pct.unwrap_or(0.0),
                row.zeta_err_pct.unwrap_or(0.0)
            ),
            _ => println!("unmatched: {row:?}"),
        }
    }
    Ok(())
}
