//! Golden-rule pair rates against drive frequency, in free space and in a waveguide.

use std::f64::consts::PI;

use vacuum_shake::coupling::CouplingProfile;
use vacuum_shake::modes::{build_freespace_quadrature, build_waveguide_band, GridOptions};
use vacuum_shake::radiation::{extract_rate_constant, log_points, rate_sweep, RateOptions};

fn main() -> vacuum_shake::Result<()> {
    let omegas = log_points(1e-3, 1e-2, 8);
    let opts = RateOptions::default();

    // The atom moves along z; the dipole is either along or across the motion.
    let fs = build_freespace_quadrature(8, 8, 8, 2e-2, 1.0)?;
    for (label, dir) in [("parallel", [0.0, 0.0, 1.0]), ("transverse", [1.0, 0.0, 0.0])] {
        let atom = CouplingProfile::static_atom(0.05, dir, 1.0)?;
        let sweep = rate_sweep(&fs, &atom, &omegas, 0.05, &opts)?;
        let fit = extract_rate_constant(&sweep, 1.0)?;
        println!(
            "free space, {label} dipole: R ~ omega_m^{:.3}, C = R / ((k_m r_m)^2 (gamma/omega_e) (omega_m/omega_e)^7 gamma) = {:.6e}",
            sweep.exponent, fit.constant_c
        );
    }

    let spacing = 1e-4;
    let wg = build_waveguide_band(spacing, 2e-2, 2.0 * PI / spacing, 1.0, GridOptions::default())?;
    let atom = CouplingProfile::waveguide(0.05, 1.0)?;
    let sweep = rate_sweep(&wg, &atom, &omegas, 0.05, &opts)?;
    println!("waveguide:  R ~ omega_m^{:.3}", sweep.exponent);
    for (p, s) in sweep.points.iter().zip(sweep.local_slopes()) {
        println!("  omega_m {:.4e}  rate {:.4e}  local slope {s:.3}", p.omega_m, p.rate);
    }
    Ok(())
}
