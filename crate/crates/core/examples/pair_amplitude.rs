//! A static atom emits nothing; a shaken one leaves free pairs behind.

use std::f64::consts::PI;

use vacuum_shake::coupling::{CouplingProfile, Trajectory};
use vacuum_shake::dressing::DressedFrame;
use vacuum_shake::modes::build_waveguide_grid;
use vacuum_shake::radiation::pair_amplitude;

fn main() -> vacuum_shake::Result<()> {
    let grid = build_waveguide_grid(6, 0.6, 2.0 * PI / 0.2, 1.0)?;
    let still = CouplingProfile::waveguide(0.1, 1.0)?;
    let shaken = CouplingProfile::oscillating_waveguide(
        0.1,
        1.0,
        Trajectory {
            r_m: 0.09 / 0.2,
            omega_m: 0.2,
            r_hat: [0.0, 0.0, 1.0],
        },
    )?;
    for (name, p) in [("static", &still), ("shaken", &shaken)] {
        let frame = DressedFrame::exact(&grid, p);
        print!("{name:>7}:");
        for t in [10.0, 40.0, 80.0] {
            let r = pair_amplitude(&frame, t)?;
            print!("  t={t:<4} max|free| {:.3e}", r.max_free());
        }
        println!();
    }
    // The resonant pair (ω_k + ω_k' = ω_m) grows linearly in time.
    let frame = DressedFrame::exact(&grid, &shaken);
    let r = pair_amplitude(&frame, 80.0)?;
    r.write_csv(std::io::stdout().lock())?;
    Ok(())
}
