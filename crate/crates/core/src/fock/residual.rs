use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::FockBasis;
use super::hamiltonian::{check_modes, original_terms, transformed_terms, Variant};
use super::transform::displacement_matrix;
use crate::dressing::DressedFrame;
use crate::error::{Error, Result};

/// Dense conjugation is limited to this dimension.
pub const RESIDUAL_MAX_DIM: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualOptions {
    /// Central-difference step for `dT†/dt`; defaults to `1e-4/ω_e`.
    pub fd_step: Option<f64>,
    /// Keep `E(t)` in the second-order Hamiltonian.
    pub include_phase: bool,
    /// Largest photon number of the rows and columns compared; defaults to
    /// `n_max − 2`, which keeps truncation-edge artifacts out of the norm.
    pub block_max: Option<usize>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            fd_step: None,
            include_phase: true,
            block_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Max-norm of `T H T† − i T dT†/dt − H'₂` over the compared block,
    /// with the Richardson-extrapolated derivative.
    pub residual: f64,
    /// Same with the plain central difference at the given step.
    pub residual_plain: f64,
    /// `|residual − residual_plain|`, a measure of the derivative error.
    pub richardson_delta: f64,
    pub block_max: usize,
    pub block_dim: usize,
}

/// `max |T H T† − i T dT†/dt − H'₂|` with default options.
pub fn transformed_residual_norm(basis: &FockBasis, frame: &DressedFrame, t: f64) -> Result<f64> {
    Ok(transformed_residual(basis, frame, t, &ResidualOptions::default())?.residual)
}

pub fn transformed_residual(
    basis: &FockBasis,
    frame: &DressedFrame,
    t: f64,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    check_modes(basis, frame.grid)?;
    let dim = basis.dim();
    if dim > RESIDUAL_MAX_DIM {
        return Err(Error::Capacity {
            dimension: dim,
            limit: RESIDUAL_MAX_DIM,
        });
    }
    let block_max = opts.block_max.unwrap_or(basis.n_max().saturating_sub(2));
    if block_max > basis.n_max() {
        return Err(Error::InvalidConfig(format!(
            "block photon number {block_max} above cutoff {}",
            basis.n_max()
        )));
    }
    let h = opts.fd_step.unwrap_or(1e-4 / frame.omega_e());
    if !(h > 0.0) {
        return Err(Error::InvalidConfig("finite-difference step must be positive".into()));
    }

    let t_dag = |s: f64| -> Result<DMatrix<Complex64>> { Ok(displacement_matrix(basis, &frame.xi_all(s)?, -1)) };
    let tm = displacement_matrix(basis, &frame.xi_all(t)?, 1);
    let ham = original_terms(frame.grid, frame.profile, t)?
        .to_sparse(basis)
        .to_dense();
    let h2 = transformed_terms(frame, t, Variant::FullOrder2, opts.include_phase)?
        .to_sparse(basis)
        .to_dense();
    let conj = &tm * &ham * tm.adjoint();

    let d1 = (t_dag(t + h)? - t_dag(t - h)?) / Complex64::new(2.0 * h, 0.0);
    let d2 = (t_dag(t + 0.5 * h)? - t_dag(t - 0.5 * h)?) / Complex64::new(h, 0.0);
    let d_rich = (&d2 * Complex64::new(4.0, 0.0) - &d1) / Complex64::new(3.0, 0.0);
    let i = Complex64::new(0.0, 1.0);

    let block: Vec<usize> = (0..dim)
        .filter(|&k| basis.photon_number(basis.state(k).1) <= block_max)
        .collect();
    let max_norm = |d: &DMatrix<Complex64>| -> f64 {
        let r = &conj - (&tm * d) * i - &h2;
        let mut m = 0.0f64;
        for &a in &block {
            for &b in &block {
                m = m.max(r[(a, b)].norm());
            }
        }
        m
    };
    let residual = max_norm(&d_rich);
    let residual_plain = max_norm(&d1);
    Ok(ResidualReport {
        residual,
        residual_plain,
        richardson_delta: (residual - residual_plain).abs(),
        block_max,
        block_dim: block.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingProfile;
    use crate::fock::basis::enumerate_basis;
    use crate::modes::build_waveguide_grid;
    use std::f64::consts::PI;

    #[test]
    fn zero_coupling_is_identity() {
        let grid = build_waveguide_grid(2, 1.0, 2.0 * PI, 1.0).unwrap();
        let p = CouplingProfile::waveguide(0.0, 1.0).unwrap();
        let frame = DressedFrame::adiabatic(&grid, &p);
        let b = enumerate_basis(2, 3).unwrap();
        assert!(transformed_residual_norm(&b, &frame, 0.0).unwrap() < 1e-10);
    }
}
