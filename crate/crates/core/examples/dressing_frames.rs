//! Compares the adiabatic and exact dressing of a shaken waveguide atom.

use std::f64::consts::PI;

use vacuum_shake::coupling::{CouplingProfile, Trajectory};
use vacuum_shake::dressing::{counter_rotating_residual, ground_state_pairs, DressedFrame};
use vacuum_shake::modes::build_waveguide_grid;

fn main() -> vacuum_shake::Result<()> {
    let grid = build_waveguide_grid(8, 1.2, 2.0 * PI / 0.3, 1.0)?;
    let drive = Trajectory {
        r_m: 0.05 / 0.3,
        omega_m: 0.3,
        r_hat: [0.0, 0.0, 1.0],
    };
    let profile = CouplingProfile::oscillating_waveguide(0.1, 1.0, drive)?;
    let adiabatic = DressedFrame::adiabatic(&grid, &profile);
    let exact = DressedFrame::exact(&grid, &profile);

    println!(
        "{:>4} {:>8} {:>12} {:>12} {:>12}",
        "k", "omega", "|xi| adiab", "|xi| exact", "residual"
    );
    let t = 7.5;
    for k in 0..grid.len() {
        println!(
            "{k:>4} {:>8.3} {:>12.4e} {:>12.4e} {:>12.2e}",
            grid.modes[k].omega,
            adiabatic.xi(k, t)?.norm(),
            exact.xi(k, t)?.norm(),
            counter_rotating_residual(&adiabatic, k, t)?.norm()
        );
    }
    println!("sum |xi|^2 = {:.3e}", exact.smallness(t)?);

    let pairs = ground_state_pairs(&adiabatic)?;
    println!(
        "two-photon weight of the dressed ground state: {:.3e}",
        pairs.two_photon_weight()
    );
    Ok(())
}
