//! Builds a waveguide band and a free-space quadrature and prints what they hold.

use std::f64::consts::PI;

use vacuum_shake::modes::{build_freespace_quadrature, build_waveguide_band, density_of_states, GridOptions};

fn main() -> vacuum_shake::Result<()> {
    let spacing = 1e-3;
    let wg = build_waveguide_band(0.9, 1.1, 2.0 * PI / spacing, 1.0, GridOptions::default())?;
    println!("waveguide: {} modes, spacing {:?}", wg.len(), wg.uniform_spacing());
    let right = wg.modes.iter().filter(|m| m.direction_sign == Some(1)).count();
    println!("  right-movers {right}, left-movers {}", wg.len() - right);
    println!("  density of states at omega = 1: {:.4e}", density_of_states(&wg, 1.0)?);

    let fs = build_freespace_quadrature(16, 6, 8, 2.0, 1.0)?;
    println!(
        "free space: {} modes ({} angular nodes x 2 polarizations)",
        fs.len(),
        fs.angular.len()
    );
    println!(
        "  polarization completeness defect {:.2e}",
        fs.polarization_completeness_defect()
    );
    // Modes below k_max = 2 in a unit volume, both polarizations: k³/(3π²).
    let total: f64 = (0..fs.len()).map(|i| fs.mode_count(i)).sum();
    let exact = 2.0f64.powi(3) / (3.0 * PI * PI);
    println!("  mode count {total:.6} vs {exact:.6}");
    Ok(())
}
