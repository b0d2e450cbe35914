//! Builds a two-mode FRF, adds multiplicative noise and reports the peaks.

use modalsparse::frf::{inject_noise, synthesize_frf, FrequencyGrid, ModalModel, Mode};
use num_complex::Complex64;

fn main() -> modalsparse::Result<()> {
    let model = ModalModel::new(vec![
        Mode { f_hz: 1292.4, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
        Mode { f_hz: 1553.8, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
    ]);
    let grid = FrequencyGrid::linspace(10.0, 3000.0, 2048)?;
    let clean = synthesize_frf(&model, &grid)?;
    let noisy = inject_noise(&clean, 0.05, 1)?;

    println!("{} lines, sampling period {:.6e} s", grid.len(), grid.ts_seconds());
    let mag = clean.mean_magnitude();
    let freqs = grid.freqs_hz();
    for k in 1..mag.len() - 1 {
        if mag[k] > mag[k - 1] && mag[k] > mag[k + 1] {
            println!("peak at {:.1} Hz, |H| = {:.4e}", freqs[k], mag[k]);
        }
    }
    let ratios: Vec<f64> = (0..grid.len()).map(|k| (noisy.h()[(0, k)] / clean.h()[(0, k)]).re - 1.0).collect();
    let rms = (ratios.iter().map(|r| r * r).sum::<f64>() / ratios.len() as f64).sqrt();
    println!("relative noise rms {rms:.4} for alpha 0.05");
    Ok(())
}
