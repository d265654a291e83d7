//! Spontaneous decay in a waveguide: brute-force propagation against the golden rule.

use std::f64::consts::PI;

use vacuum_shake::coupling::{with_target_gamma, CouplingProfile};
use vacuum_shake::fock::PropagateOptions;
use vacuum_shake::modes::{build_waveguide_band, GridOptions};
use vacuum_shake::scattering::{decay_amplitudes, gamma_from_coupling, oracle_decay};

fn main() -> vacuum_shake::Result<()> {
    let spacing = 4e-4;
    let grid = build_waveguide_band(0.98 + 1e-9, 1.02, 2.0 * PI / spacing, 1.0, GridOptions::default())?;
    let atom = with_target_gamma(CouplingProfile::waveguide(1.0, 1.0)?, &grid, 1e-3)?;
    let gamma = gamma_from_coupling(&grid, &atom)?;
    let t_max = 3.0 / gamma;

    let report = oracle_decay(
        &grid,
        &atom,
        t_max,
        12,
        &PropagateOptions::with_tol(1e-10).interaction(),
    )?;
    println!("{} modes, gamma = {gamma:.4e}", grid.len());
    println!(
        "fitted {:.5e} (rel error {:.2e}, r^2 {:.6})",
        report.gamma_fit, report.rel_error, report.r_squared
    );
    for (t, a) in report.times.iter().zip(&report.excited_abs) {
        println!(
            "  t {t:>8.1}  |c_e| {a:.5}  exp(-gamma t/2) {:.5}",
            (-0.5 * gamma * t).exp()
        );
    }

    let ww = decay_amplitudes(&grid, &atom, gamma, t_max)?;
    println!("analytic total probability at t_max {:.4}", ww.total_probability());
    println!("mode amplitude deviation {:.2e}", report.rms_mode_deviation);
    Ok(())
}
