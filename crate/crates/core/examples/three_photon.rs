//! A Lorentzian photon scatters off a waveguide atom into three photons.

use std::f64::consts::PI;

use vacuum_shake::coupling::{with_target_gamma, CouplingProfile};
use vacuum_shake::modes::{build_waveguide_band, GridOptions};
use vacuum_shake::scattering::{
    excited_amplitude_scattering, far_packet_check, gamma_from_coupling, lorentzian_wavepacket,
    three_photon_coefficients,
};

fn main() -> vacuum_shake::Result<()> {
    let gamma = 1e-3;
    let gamma_prime = 1e-3;
    let spacing = gamma / 4.0;
    let grid = build_waveguide_band(0.5 * spacing, 1.5, 2.0 * PI / spacing, 1.0, GridOptions::default())?;
    let atom = with_target_gamma(CouplingProfile::waveguide(1.0, 1.0)?, &grid, gamma)?;
    let gamma = gamma_from_coupling(&grid, &atom)?;

    let packet = lorentzian_wavepacket(&grid, 1.0, gamma_prime, -PI / spacing)?;
    let far = far_packet_check(&packet, &grid, 1.0)?;
    println!(
        "{} modes, packet norm {:.5}, overlap with atom {:.1e}",
        grid.len(),
        packet.norm_sqr(),
        far.overlap
    );

    for n in [1, 2, 4, 8] {
        let tau = n as f64 / gamma;
        let c = excited_amplitude_scattering(gamma, gamma_prime, 1.0, tau)?;
        println!("  tau = {n}/gamma: |c_e| = {:.4}", c.norm());
    }

    let tensor = three_photon_coefficients(&grid, &atom, gamma, gamma_prime, packet.arrival_time(grid.c))?;
    println!("P3 = {:.4e}", tensor.probability());
    println!(
        "mean energy {:.6}, mass within 10 gamma {:.5}",
        tensor.mean_energy(),
        tensor.mass_fraction(10.0 * gamma)
    );
    Ok(())
}
