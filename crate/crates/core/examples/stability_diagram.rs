//! Conventional stability diagram of a noisy FRF, written as SVG.
//!
//! `cargo run --example stability_diagram -- [out.svg]`

use modalsparse::frf::{inject_noise, synthesize_frf, FrequencyGrid, ModalModel, Mode};
use modalsparse::stabilization::{extract_modes, run_conventional, DEFAULT_MIN_STREAK};
use modalsparse::svg::stability_diagram_svg;
use num_complex::Complex64;

fn main() -> modalsparse::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("stability_diagram.svg").display().to_string());
    let model = ModalModel::new(vec![
        Mode { f_hz: 1292.4, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
        Mode { f_hz: 1553.8, zeta: 0.01, residues: vec![Complex64::new(0.0, -1.0)] },
    ]);
    let grid = FrequencyGrid::linspace(10.0, 3000.0, 2048)?;
    let frf = inject_noise(&synthesize_frf(&model, &grid)?, 0.05, 1)?;

    let diagram = run_conventional(&frf, 30)?;
    for row in diagram.rows.iter().step_by(5) {
        let fs: Vec<String> = row.entries.iter().map(|e| format!("{:.1}", e.pole.f_hz)).collect();
        println!("order {:>2}: {}", row.order, fs.join(" "));
    }
    for m in extract_modes(&diagram, DEFAULT_MIN_STREAK) {
        println!("mode {:.2} Hz, zeta {:.5}, seen over {} orders", m.f_hz, m.zeta, m.streak);
    }
    modalsparse::io::write_text(std::path::Path::new(&out), &stability_diagram_svg(&diagram, &frf))?;
    println!("diagram written to {out}");
    Ok(())
}
