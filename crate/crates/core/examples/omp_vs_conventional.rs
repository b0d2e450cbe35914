//! Pole counts of the dense and the OMP sweep on the same noisy data.

use modalsparse::frf::{inject_noise, synthesize_frf, FrequencyGrid, ModalModel, Mode};
use modalsparse::lscf::assemble_normal_cache;
use modalsparse::stabilization::{extract_modes, sweep, Method, SweepOptions, DEFAULT_MIN_STREAK};
use num_complex::Complex64;

fn main() -> modalsparse::Result<()> {
    let model = ModalModel::new(vec![
        Mode { f_hz: 1292.4, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
        Mode { f_hz: 1553.8, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
    ]);
    let grid = FrequencyGrid::linspace(10.0, 3000.0, 2048)?;
    for alpha in [0.05, 0.1] {
        let frf = inject_noise(&synthesize_frf(&model, &grid)?, alpha, 3)?;
        let cache = assemble_normal_cache(&frf, 30)?;
        println!("alpha {alpha}");
        for method in [Method::Conventional, Method::Omp] {
            let diagram = sweep(&cache, &frf, method, SweepOptions::default())?;
            let s = diagram.stats();
            let modes: Vec<String> = extract_modes(&diagram, DEFAULT_MIN_STREAK)
                .iter()
                .map(|m| format!("{:.1} Hz", m.f_hz))
                .collect();
            println!(
                "  {method:<12} stable {:>3}  unstable {:>3}  spurious {:>3}  sparsity {:?}  modes [{}]",
                s.n_stable,
                s.n_unstable,
                diagram.spurious_count(),
                diagram.sparsity,
                modes.join(", ")
            );
        }
    }
    Ok(())
}
