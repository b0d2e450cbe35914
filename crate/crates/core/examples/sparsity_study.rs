//! Share of roots inside the unit circle for random polynomials with few
//! nonzero coefficients. Smaller than the CLI default so it finishes quickly.

use modalsparse::experiments::run_sparsity_study_with;

fn main() -> modalsparse::Result<()> {
    for half_width in [1.0, 0.2] {
        println!("coefficients uniform on (-{half_width}, {half_width})");
        for r in run_sparsity_study_with(100, &[100, 70, 30, 5], 200, 11, half_width)? {
            println!(
                "  {:>3} nonzero: {:5.1}% inside (std {:.1})",
                r.nonzero_count, r.pct_inside_mean, r.pct_inside_std
            );
        }
    }
    Ok(())
}
