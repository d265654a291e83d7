//! Discretized field modes for a 1D waveguide (box quantization) and 3D free
//! space (product Gauss quadrature with two transverse polarizations).
//!
//! Units: ħ = 1, frequencies in units of the atomic frequency unless a grid is
//! built otherwise, and the speed of light `c` carried explicitly by the grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::vec3::{cross, dot, norm, Vec3};

/// A single field mode `(k, s)`. Polarization is flattened into the mode list,
/// so two modes share a wavevector in 3D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: usize,
    pub omega: f64,
    /// 1D modes use only the first component.
    pub wavevector: Vec3,
    /// Transverse unit polarization (3D only).
    pub polarization: Option<Vec3>,
    /// +1 right-moving, -1 left-moving (1D only).
    pub direction_sign: Option<i8>,
}

impl Mode {
    pub fn k(&self) -> f64 {
        norm(&self.wavevector)
    }

    /// Unit propagation direction.
    pub fn direction(&self) -> Vec3 {
        let k = self.k();
        [self.wavevector[0] / k, self.wavevector[1] / k, self.wavevector[2] / k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Geometry {
    Waveguide1D { length: f64, area: f64 },
    FreeSpace3D { volume: f64 },
}

/// One direction of the angular product rule together with its two
/// transverse polarizations. `weight` integrates over the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularNode {
    pub direction: Vec3,
    pub polarizations: [Vec3; 2],
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub c: f64,
    /// Infrared cutoff; modes below it are dropped.
    pub omega_min: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            c: 1.0,
            omega_min: 1e-6,
        }
    }
}

/// Immutable set of modes with per-mode quadrature weights.
///
/// 1D weights count modes (one per `Δk = 2π/L`). 3D weights are `d³k`
/// measures, so `Σ w f(k)` approximates `∫ d³k f(k)` for each polarization
/// class; multiply by `V/(2π)³` to count modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub modes: Vec<Mode>,
    pub weights: Vec<f64>,
    pub geometry: Geometry,
    pub omega_min: f64,
    pub omega_max: f64,
    pub c: f64,
    /// Angular rule used to build a 3D grid; empty in 1D.
    #[serde(default)]
    pub angular: Vec<AngularNode>,
    /// Radial node count of a 3D grid; zero in 1D.
    #[serde(default)]
    pub n_radial: usize,
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Box-quantized waveguide with `n_modes / 2` right-movers and as many
/// left-movers at `k = j Δk`, `j = 1..=n_modes/2`, `Δk = 2π/L`.
pub fn build_waveguide_grid(n_modes: usize, omega_max: f64, length: f64, area: f64) -> Result<ModeGrid> {
    build_waveguide_grid_with(n_modes, omega_max, length, area, GridOptions::default())
}

pub fn build_waveguide_grid_with(
    n_modes: usize,
    omega_max: f64,
    length: f64,
    area: f64,
    opts: GridOptions,
) -> Result<ModeGrid> {
    check_positive("omega_max", omega_max)?;
    check_positive("length", length)?;
    check_positive("area", area)?;
    check_positive("c", opts.c)?;
    if n_modes < 2 || !n_modes.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "n_modes must be even and >= 2, got {n_modes}"
        )));
    }
    let dk = 2.0 * PI / length;
    let per_direction = n_modes / 2;
    let top = opts.c * dk * per_direction as f64;
    if top > omega_max * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "{per_direction} modes per direction reach omega = {top}, above omega_max = {omega_max}"
        )));
    }
    let js: Vec<usize> = (1..=per_direction).collect();
    waveguide_from_indices(&js, dk, length, area, opts, omega_max)
}

/// All box modes of a waveguide of length `L` whose frequency lies in
/// `[omega_lo, omega_hi]`, in both directions.
pub fn build_waveguide_band(
    omega_lo: f64,
    omega_hi: f64,
    length: f64,
    area: f64,
    opts: GridOptions,
) -> Result<ModeGrid> {
    check_positive("omega_hi", omega_hi)?;
    check_positive("length", length)?;
    check_positive("area", area)?;
    check_positive("c", opts.c)?;
    if !(omega_lo < omega_hi) {
        return Err(Error::InvalidConfig(format!("empty band [{omega_lo}, {omega_hi}]")));
    }
    let dk = 2.0 * PI / length;
    let lo = omega_lo.max(opts.omega_min);
    let j_lo = ((lo / (opts.c * dk)) - 1e-9).ceil().max(1.0) as usize;
    let j_hi = ((omega_hi / (opts.c * dk)) + 1e-9).floor() as usize;
    if j_hi < j_lo {
        return Err(Error::Band(format!(
            "no box modes of spacing {} in [{omega_lo}, {omega_hi}]",
            opts.c * dk
        )));
    }
    let js: Vec<usize> = (j_lo..=j_hi).collect();
    let mut grid = waveguide_from_indices(&js, dk, length, area, opts, omega_hi)?;
    grid.omega_min = omega_lo.max(opts.omega_min);
    Ok(grid)
}

fn waveguide_from_indices(
    js: &[usize],
    dk: f64,
    length: f64,
    area: f64,
    opts: GridOptions,
    omega_max: f64,
) -> Result<ModeGrid> {
    let mut modes = Vec::with_capacity(2 * js.len());
    for sign in [1i8, -1i8] {
        for &j in js {
            let k = j as f64 * dk;
            let omega = opts.c * k;
            if omega < opts.omega_min {
                continue;
            }
            modes.push(Mode {
                index: modes.len(),
                omega,
                wavevector: [sign as f64 * k, 0.0, 0.0],
                polarization: None,
                direction_sign: Some(sign),
            });
        }
    }
    if modes.is_empty() {
        return Err(Error::Band("all modes below the infrared cutoff".into()));
    }
    let weights = vec![1.0; modes.len()];
    Ok(ModeGrid {
        modes,
        weights,
        geometry: Geometry::Waveguide1D { length, area },
        omega_min: opts.omega_min,
        omega_max,
        c: opts.c,
        angular: Vec::new(),
        n_radial: 0,
    })
}

/// Transverse polarization pair (θ̂, φ̂) for the direction at polar angle
/// `theta` and azimuth `phi`.
pub fn polarization_pair(cos_theta: f64, phi: f64) -> (Vec3, [Vec3; 2]) {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    let k_hat = [sin_theta * cp, sin_theta * sp, cos_theta];
    let e_theta = [cos_theta * cp, cos_theta * sp, -sin_theta];
    let e_phi = [-sp, cp, 0.0];
    (k_hat, [e_theta, e_phi])
}

/// Gauss–Legendre in `cos θ` times a uniform trapezoid in `φ`.
pub fn angular_rule(n_polar: usize, n_azimuthal: usize) -> Vec<AngularNode> {
    let polar = gauss_legendre(n_polar, -1.0, 1.0);
    let dphi = 2.0 * PI / n_azimuthal as f64;
    let mut nodes = Vec::with_capacity(n_polar * n_azimuthal);
    for &(u, wu) in &polar {
        for j in 0..n_azimuthal {
            let phi = (j as f64 + 0.5) * dphi;
            let (direction, polarizations) = polarization_pair(u, phi);
            nodes.push(AngularNode {
                direction,
                polarizations,
                weight: wu * dphi,
            });
        }
    }
    nodes
}

/// Free-space product quadrature: radial Gauss–Legendre on `[0, k_max]`,
/// `k_max = omega_max / c`, with the `k²` Jacobian folded into the weights.
pub fn build_freespace_quadrature(
    n_radial: usize,
    n_polar: usize,
    n_azimuthal: usize,
    omega_max: f64,
    volume: f64,
) -> Result<ModeGrid> {
    build_freespace_quadrature_with(
        n_radial,
        n_polar,
        n_azimuthal,
        omega_max,
        volume,
        GridOptions::default(),
    )
}

pub fn build_freespace_quadrature_with(
    n_radial: usize,
    n_polar: usize,
    n_azimuthal: usize,
    omega_max: f64,
    volume: f64,
    opts: GridOptions,
) -> Result<ModeGrid> {
    check_positive("omega_max", omega_max)?;
    check_positive("volume", volume)?;
    check_positive("c", opts.c)?;
    if n_radial == 0 || n_polar == 0 || n_azimuthal == 0 {
        return Err(Error::InvalidConfig("quadrature counts must all be >= 1".into()));
    }
    let k_max = omega_max / opts.c;
    let radial = gauss_legendre(n_radial, 0.0, k_max);
    let angular = angular_rule(n_polar, n_azimuthal);
    let mut modes = Vec::with_capacity(2 * n_radial * angular.len());
    let mut weights = Vec::with_capacity(modes.capacity());
    // Ordering: polarization class, then direction, then radial (so omega is
    // ascending within each class).
    for s in 0..2 {
        for node in &angular {
            for &(k, wk) in &radial {
                let omega = opts.c * k;
                if omega < opts.omega_min {
                    continue;
                }
                modes.push(Mode {
                    index: modes.len(),
                    omega,
                    wavevector: [k * node.direction[0], k * node.direction[1], k * node.direction[2]],
                    polarization: Some(node.polarizations[s]),
                    direction_sign: None,
                });
                weights.push(wk * k * k * node.weight);
            }
        }
    }
    Ok(ModeGrid {
        modes,
        weights,
        geometry: Geometry::FreeSpace3D { volume },
        omega_min: opts.omega_min,
        omega_max,
        c: opts.c,
        angular,
        n_radial,
    })
}

/// Mode density per unit angular frequency: `L/(2πc)` per direction in 1D,
/// `V ω²/(2π² c³)` per polarization in 3D.
pub fn density_of_states(grid: &ModeGrid, omega: f64) -> Result<f64> {
    if !(omega >= grid.omega_min && omega <= grid.omega_max) {
        return Err(Error::Domain(format!(
            "omega = {omega} outside band [{}, {}]",
            grid.omega_min, grid.omega_max
        )));
    }
    let c = grid.c;
    Ok(match grid.geometry {
        Geometry::Waveguide1D { length, .. } => length / (2.0 * PI * c),
        Geometry::FreeSpace3D { volume } => volume * omega * omega / (2.0 * PI * PI * c * c * c),
    })
}

impl ModeGrid {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn is_waveguide(&self) -> bool {
        matches!(self.geometry, Geometry::Waveguide1D { .. })
    }

    /// Number of physical modes represented by grid entry `i`.
    pub fn mode_count(&self, i: usize) -> f64 {
        match self.geometry {
            Geometry::Waveguide1D { .. } => self.weights[i],
            Geometry::FreeSpace3D { volume } => self.weights[i] * volume / (8.0 * PI * PI * PI),
        }
    }

    /// Mode density in k-space, `L/(2π)` or `V/(2π)³`.
    pub fn k_space_density(&self) -> f64 {
        match self.geometry {
            Geometry::Waveguide1D { length, .. } => length / (2.0 * PI),
            Geometry::FreeSpace3D { volume } => volume / (8.0 * PI * PI * PI),
        }
    }

    /// Frequency spacing when every mode sits on `ω = j Δω` with the same
    /// integer lattice in both directions (box-quantized waveguide).
    pub fn uniform_spacing(&self) -> Option<f64> {
        let Geometry::Waveguide1D { length, .. } = self.geometry else {
            return None;
        };
        let d_omega = self.c * 2.0 * PI / length;
        let on_lattice = self.modes.iter().all(|m| {
            let j = m.omega / d_omega;
            (j - j.round()).abs() < 1e-9
        });
        on_lattice.then_some(d_omega)
    }

    /// Polarization completeness defect `max |Σ_s ε_a ε_b − (δ_ab − k̂_a k̂_b)|`
    /// over all angular nodes.
    pub fn polarization_completeness_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for node in &self.angular {
            for a in 0..3 {
                for b in 0..3 {
                    let sum: f64 = node.polarizations.iter().map(|e| e[a] * e[b]).sum();
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let target = delta - node.direction[a] * node.direction[b];
                    worst = worst.max((sum - target).abs());
                }
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Check that the stored 3D polarizations are transverse unit vectors.
pub fn transversality_defect(mode: &Mode) -> Option<f64> {
    let e = mode.polarization?;
    let k_hat = mode.direction();
    let unit = (norm(&e) - 1.0).abs();
    let perp = dot(&e, &k_hat).abs();
    let handed = {
        let c = cross(&k_hat, &e);
        (norm(&c) - 1.0).abs()
    };
    Some(unit.max(perp).max(handed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn four_mode_waveguide_spacing() {
        let grid = build_waveguide_grid(4, 2.0, 4.0 * PI, 1.0).unwrap();
        let ks: Vec<f64> = grid.modes.iter().map(|m| m.wavevector[0]).collect();
        assert_eq!(ks, vec![0.5, 1.0, -0.5, -1.0]);
        let omegas: Vec<f64> = grid.modes.iter().map(|m| m.omega).collect();
        assert_eq!(omegas, vec![0.5, 1.0, 0.5, 1.0]);
        assert!(grid.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn minimal_waveguide() {
        let grid = build_waveguide_grid(2, 1.0, 2.0 * PI, 1.0).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid.modes[0].direction_sign, Some(1));
        assert_eq!(grid.modes[1].direction_sign, Some(-1));
        assert_relative_eq!(grid.modes[0].omega, 1.0, epsilon = 1e-15);
        assert_relative_eq!(grid.modes[1].omega, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn waveguide_rejects_bad_config() {
        assert!(matches!(
            build_waveguide_grid(4, 2.0, -1.0, 1.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            build_waveguide_grid(4, 2.0, 1.0, 0.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            build_waveguide_grid(4, 0.0, 1.0, 1.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            build_waveguide_grid(3, 2.0, 1.0, 1.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn waveguide_band_count_matches_analytic() {
        // Band [0, ω_max] holds L ω_max / (π c) modes (both directions).
        let length = 200.0 * PI;
        let omega_max = 1.0;
        let n = (length * omega_max / PI) as usize;
        let grid = build_waveguide_grid(n, omega_max, length, 1.0).unwrap();
        let count: f64 = grid
            .modes
            .iter()
            .zip(&grid.weights)
            .filter(|(m, _)| m.omega <= omega_max)
            .map(|(_, w)| w)
            .sum();
        assert!((count - length * omega_max / PI).abs() <= 1.0);
    }

    #[test]
    fn waveguide_band_selection() {
        let grid = build_waveguide_band(0.9, 1.1, 100.0 * PI, 1.0, GridOptions::default()).unwrap();
        assert!(grid.modes.iter().all(|m| m.omega >= 0.9 && m.omega <= 1.1));
        assert_eq!(grid.len(), 2 * 11);
        assert!(grid.uniform_spacing().is_some());
    }

    #[test]
    fn freespace_volume_and_k2_moments() {
        for n_radial in [2, 3, 8] {
            let grid = build_freespace_quadrature(n_radial, 4, 6, 1.0, 1.0).unwrap();
            let one_pol = grid.weights.len() / 2;
            let vol: f64 = grid.weights[..one_pol].iter().sum();
            assert_relative_eq!(vol, 4.0 * PI / 3.0, max_relative = 1e-10);
            if n_radial >= 3 {
                let k2: f64 = grid.weights[..one_pol]
                    .iter()
                    .zip(&grid.modes)
                    .map(|(w, m)| w * m.k() * m.k())
                    .sum();
                assert_relative_eq!(k2, 4.0 * PI / 5.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn polarization_sum_identity() {
        let grid = build_freespace_quadrature(2, 4, 6, 1.0, 1.0).unwrap();
        let d_hat = [0.3, -0.5, 0.8];
        let dn = norm(&d_hat);
        let d_hat = [d_hat[0] / dn, d_hat[1] / dn, d_hat[2] / dn];
        let sum: f64 = grid
            .angular
            .iter()
            .map(|n| n.weight * n.polarizations.iter().map(|e| dot(&d_hat, e).powi(2)).sum::<f64>())
            .sum();
        assert_relative_eq!(sum, 8.0 * PI / 3.0, max_relative = 1e-10);
        assert!(grid.polarization_completeness_defect() < 1e-12);
        for m in &grid.modes {
            assert!(transversality_defect(m).unwrap() < 1e-12);
        }
    }

    #[test]
    fn density_of_states_laws() {
        let wg = build_waveguide_grid(8, 4.0, 8.0, 2.0).unwrap();
        let rho = density_of_states(&wg, 1.0).unwrap();
        assert_relative_eq!(rho, 8.0 / (2.0 * PI), epsilon = 1e-15);
        assert_eq!(density_of_states(&wg, 3.0).unwrap(), rho);

        let fs = build_freespace_quadrature(4, 2, 3, 2.0, 5.0).unwrap();
        let r1 = density_of_states(&fs, 0.5).unwrap();
        let r2 = density_of_states(&fs, 1.0).unwrap();
        assert_relative_eq!(r2 / r1, 4.0, epsilon = 1e-14);
        assert!(matches!(density_of_states(&fs, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn histogram_matches_density_of_states() {
        // Bin edges at midpoints between radial nodes; one polarization class.
        let volume = 10.0;
        let grid = build_freespace_quadrature(64, 4, 6, 1.0, volume).unwrap();
        let radial: Vec<f64> = gauss_legendre(64, 0.0, 1.0).iter().map(|p| p.0).collect();
        let per_node: Vec<f64> = radial
            .iter()
            .map(|&k| {
                grid.modes
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| (m.k() - k).abs() < 1e-12)
                    .map(|(i, _)| grid.mode_count(i))
                    .sum::<f64>()
                    / 2.0
            })
            .collect();
        let edges: Vec<f64> = (0..=8)
            .map(|b| {
                let i = 8 * b;
                if i == 0 {
                    0.0
                } else if i >= 64 {
                    1.0
                } else {
                    0.5 * (radial[i - 1] + radial[i])
                }
            })
            .collect();
        for b in 1..7 {
            let (lo, hi) = (edges[b], edges[b + 1]);
            let counted: f64 = per_node[8 * b..8 * (b + 1)].iter().sum();
            let analytic = volume * (hi.powi(3) - lo.powi(3)) / (6.0 * PI * PI);
            assert!(
                (counted / analytic - 1.0).abs() < 0.02,
                "bin {b}: {counted} vs {analytic}"
            );
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = build_freespace_quadrature(5, 3, 4, 1.0, 1.0).unwrap();
        let b = build_freespace_quadrature(5, 3, 4, 1.0, 1.0).unwrap();
        assert_eq!(a, b);
        let json = a.to_json().unwrap();
        assert_eq!(ModeGrid::from_json(&json).unwrap(), a);
    }

    #[test]
    fn refinement_changes_smooth_functional_little() {
        let f = |m: &Mode| (-m.k()).exp() * m.direction()[2].powi(2);
        let integrate = |g: &ModeGrid| -> f64 { g.modes.iter().zip(&g.weights).map(|(m, w)| w * f(m)).sum() };
        let coarse = integrate(&build_freespace_quadrature(6, 3, 4, 1.0, 1.0).unwrap());
        let fine = integrate(&build_freespace_quadrature(12, 6, 8, 1.0, 1.0).unwrap());
        assert!((coarse - fine).abs() < 1e-9 * fine.abs());
    }
}
