use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{FockBasis, Level};
use super::hamiltonian::check_modes;
use super::operator::FockStateVector;
use crate::dressing::DressedFrame;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest accepted probability leaking past the photon cutoff.
pub const NORM_LOSS_LIMIT: f64 = 1e-6;

/// `out = σ_x X ψ` with `X = Σ (ξ* a† − ξ a)`, truncated to the basis.
pub fn apply_sigma_x_x(basis: &FockBasis, xi: &[Complex64], psi: &[Complex64], out: &mut [Complex64]) {
    let row = |i: usize| -> Complex64 {
        let (level, c) = basis.state(i);
        let other = match level {
            Level::Ground => Level::Excited,
            Level::Excited => Level::Ground,
        };
        let mut acc = ZERO;
        // ξ_k* a_k† from |c − k⟩
        for &(m, n) in basis.occupations(c) {
            let k = m as usize;
            if let Some(c2) = basis.lower(c, k) {
                acc += xi[k].conj() * (n as f64).sqrt() * psi[basis.index(other, c2)];
            }
        }
        // −ξ_k a_k from |c + k⟩
        if basis.photon_number(c) < basis.n_max() {
            for (k, x) in xi.iter().enumerate() {
                if *x == ZERO {
                    continue;
                }
                if let Some(c2) = basis.raise(c, k) {
                    let n = basis.occupation(c, k) as f64;
                    acc -= x * (n + 1.0).sqrt() * psi[basis.index(other, c2)];
                }
            }
        }
        acc
    };
    if basis.dim() >= 2048 {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = row(i);
        }
    }
}

/// Probability that `σ_x X` moves out of the truncated space:
/// `‖B† ψ_top‖² = ‖B ψ_top‖² + Σ|ξ|² ‖ψ_top‖²` over the top photon sector.
pub fn truncation_leakage(basis: &FockBasis, xi: &[Complex64], psi: &[Complex64]) -> f64 {
    let top = basis.sector(basis.n_max());
    let s: f64 = xi.iter().map(|x| x.norm_sqr()).sum();
    let mut top_norm = 0.0;
    let mut lowered = vec![ZERO; basis.dim()];
    for c in top {
        for level in [Level::Ground, Level::Excited] {
            let a = psi[basis.index(level, c)];
            if a == ZERO {
                continue;
            }
            top_norm += a.norm_sqr();
            for &(m, n) in basis.occupations(c) {
                let k = m as usize;
                if let Some(c2) = basis.lower(c, k) {
                    lowered[basis.index(level, c2)] += xi[k] * (n as f64).sqrt() * a;
                }
            }
        }
    }
    lowered.iter().map(|a| a.norm_sqr()).sum::<f64>() + s * top_norm
}

/// Outcome of one application of `T^{±1}`.
#[derive(Debug, Clone)]
pub struct TransformReport {
    pub state: FockStateVector,
    /// Largest leakage of the input or output state.
    pub norm_loss: f64,
    /// `|‖Tψ‖ − ‖ψ‖|`.
    pub norm_change: f64,
}

/// `exp(direction · σ_x X) ψ` by a scaled Taylor series.
pub fn apply_displacement(basis: &FockBasis, xi: &[Complex64], psi: &[Complex64], direction: i32) -> Vec<Complex64> {
    assert!(direction == 1 || direction == -1, "direction must be +1 or -1");
    let sign = direction as f64;
    let s: f64 = xi.iter().map(|x| x.norm_sqr()).sum();
    let bound = 2.0 * (s * basis.n_max().max(1) as f64).sqrt();
    let substeps = ((bound / 0.5).ceil() as usize).max(1);
    let h = sign / substeps as f64;
    let mut v = psi.to_vec();
    let mut term = vec![ZERO; v.len()];
    let mut next = vec![ZERO; v.len()];
    for _ in 0..substeps {
        term.copy_from_slice(&v);
        let scale = v
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        for order in 1..=60 {
            apply_sigma_x_x(basis, xi, &term, &mut next);
            let f = h / order as f64;
            let mut tn = 0.0;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * f;
                tn += t.norm_sqr();
            }
            for (a, t) in v.iter_mut().zip(&term) {
                *a += t;
            }
            if tn.sqrt() <= 1e-18 * scale {
                break;
            }
        }
    }
    v
}

/// `T(t)^{direction} |ψ⟩` with `T = exp[σ_x X(t)]`; fails when the state
/// leaks more than [`NORM_LOSS_LIMIT`] past the photon cutoff.
pub fn apply_t(
    basis: &FockBasis,
    frame: &DressedFrame,
    t: f64,
    state: &FockStateVector,
    direction: i32,
) -> Result<FockStateVector> {
    let rep = apply_t_with_report(basis, frame, t, state, direction)?;
    if rep.norm_loss > NORM_LOSS_LIMIT {
        return Err(Error::Truncation {
            norm_loss: rep.norm_loss,
            limit: NORM_LOSS_LIMIT,
        });
    }
    Ok(rep.state)
}

/// [`apply_t`] without the leakage check, reporting the diagnostics.
pub fn apply_t_with_report(
    basis: &FockBasis,
    frame: &DressedFrame,
    t: f64,
    state: &FockStateVector,
    direction: i32,
) -> Result<TransformReport> {
    check_modes(basis, frame.grid)?;
    if !state.compatible(basis) {
        return Err(Error::InvalidConfig("state does not belong to this basis".into()));
    }
    if direction != 1 && direction != -1 {
        return Err(Error::InvalidConfig(format!(
            "direction must be +1 or -1, got {direction}"
        )));
    }
    let xi = frame.xi_all(t)?;
    let out = apply_displacement(basis, &xi, &state.amplitudes, direction);
    let norm_loss = truncation_leakage(basis, &xi, &state.amplitudes).max(truncation_leakage(basis, &xi, &out));
    let out = FockStateVector::from_amplitudes(basis, out)?;
    Ok(TransformReport {
        norm_change: (out.norm() - state.norm()).abs(),
        norm_loss,
        state: out,
    })
}

/// Dense matrix of `exp(direction · σ_x X)` on the truncated space.
pub fn displacement_matrix(basis: &FockBasis, xi: &[Complex64], direction: i32) -> DMatrix<Complex64> {
    let dim = basis.dim();
    let cols: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![ZERO; dim];
            e[j] = Complex64::new(1.0, 0.0);
            apply_displacement(basis, xi, &e, direction)
        })
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingProfile;
    use crate::fock::basis::enumerate_basis;
    use crate::modes::build_waveguide_grid;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unitarity_on_random_state() {
        let b = enumerate_basis(3, 4).unwrap();
        let xi = vec![c(0.05, 0.01), c(-0.02, 0.03), c(0.0, -0.04)];
        let psi: Vec<Complex64> = (0..b.dim())
            .map(|i| c((1.3 * i as f64).sin(), (0.7 * i as f64).cos()))
            .collect();
        let fwd = apply_displacement(&b, &xi, &psi, 1);
        let back = apply_displacement(&b, &xi, &fwd, -1);
        let n0: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let n1: f64 = fwd.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!((n0 - n1).abs() < 1e-12 * n0);
        for (a, b) in psi.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12 * n0);
        }
    }

    #[test]
    fn first_order_expansion() {
        let b = enumerate_basis(2, 3).unwrap();
        let xi = vec![c(1e-4, 2e-4), c(-3e-4, 0.0)];
        let g0 = b.index(Level::Ground, 0);
        let mut psi = vec![ZERO; b.dim()];
        psi[g0] = c(1.0, 0.0);
        let out = apply_displacement(&b, &xi, &psi, -1);
        assert!((out[g0] - 1.0).norm() < 1e-7);
        for k in 0..2 {
            let mut occ = [0, 0];
            occ[k] = 1;
            let e1 = b.index_of(Level::Excited, &occ).unwrap();
            assert!((out[e1] + xi[k].conj()).norm() < 1e-7);
        }
    }

    #[test]
    fn single_mode_matches_branch_coherent_states() {
        // In the σ_x basis T† displaces by ∓ξ, so |g,0⟩ maps to a
        // superposition of two coherent states with photon statistics
        // P(n) = e^{-|ξ|²} |ξ|^{2n}/n!.
        let b = enumerate_basis(1, 14).unwrap();
        let xi = vec![c(0.1, 0.0)];
        let mut psi = vec![ZERO; b.dim()];
        psi[b.index(Level::Ground, 0)] = c(1.0, 0.0);
        let out = apply_displacement(&b, &xi, &psi, -1);
        let s = 0.01f64;
        let mut fact = 1.0;
        for n in 0..6 {
            if n > 0 {
                fact *= n as f64;
            }
            let p: f64 = [Level::Ground, Level::Excited]
                .iter()
                .map(|&l| out[b.index(l, n)].norm_sqr())
                .sum();
            let expected = (-s).exp() * s.powi(n as i32) / fact;
            assert!((p - expected).abs() < 1e-14, "n = {n}: {p} vs {expected}");
            // odd photon numbers sit on the excited level
            let excited = out[b.index(Level::Excited, n)].norm_sqr();
            if n % 2 == 1 {
                assert!((excited - expected).abs() < 1e-14);
            } else {
                assert!(excited < 1e-28);
            }
        }
    }

    #[test]
    fn truncation_is_reported() {
        let grid = build_waveguide_grid(2, 1.0, 2.0 * PI, 1.0).unwrap();
        let p = CouplingProfile::waveguide(1.0, 1.0).unwrap();
        let frame = DressedFrame::adiabatic(&grid, &p);
        let b = enumerate_basis(2, 1).unwrap();
        let s = FockStateVector::vacuum(&b, Level::Ground);
        assert!(matches!(
            apply_t(&b, &frame, 0.0, &s, -1),
            Err(Error::Truncation { .. })
        ));
        let b6 = enumerate_basis(2, 6).unwrap();
        let s6 = FockStateVector::vacuum(&b6, Level::Ground);
        let out = apply_t(&b6, &frame, 0.0, &s6, -1).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }
}
