use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{FockBasis, Level};
use super::operator::SparseOperator;
use crate::coupling::{eval_g, CouplingProfile};
use crate::dressing::{phase_term, DressedFrame};
use crate::error::{Error, Result};
use crate::modes::ModeGrid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which transformed Hamiltonian to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Second order in `ξ` before eliminating the counter-rotating terms:
    /// co- and counter-rotating coefficients, `ω_e X² σ_z` and `E(t)`.
    FullOrder2,
    /// `H0 + H1 + σ_z Γ`.
    NormalOrdered,
    /// `H0 + H1`.
    H0H1Only,
}

/// `σ_z · coeff · :X²:` with `X = Σ (ξ* a† − ξ a)`, where
/// `:X²: = B†B† + BB − 2B†B` and `B = Σ ξ_k a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTerm {
    pub coeff: f64,
    pub xi: Vec<Complex64>,
}

/// Hermitian operator of the form
/// `(ω_z/2) σ_z + Σ ω_k a†a + Σ_k [(α_k σ+ + β_k σ−) a_k + h.c.] + pair + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTerms {
    pub omega_z: f64,
    pub omegas: Vec<f64>,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub pair: Option<PairTerm>,
    pub constant: f64,
}

impl FieldTerms {
    pub fn free(omega_e: f64, omegas: Vec<f64>) -> Self {
        let n = omegas.len();
        FieldTerms {
            omega_z: omega_e,
            omegas,
            alpha: vec![ZERO; n],
            beta: vec![ZERO; n],
            pair: None,
            constant: 0.0,
        }
    }

    fn check(&self, basis: &FockBasis) {
        assert_eq!(self.omegas.len(), basis.n_modes(), "mode count does not match basis");
    }

    /// Real diagonal part.
    pub fn diagonal(&self, basis: &FockBasis) -> Vec<f64> {
        self.check(basis);
        (0..basis.dim()).map(|i| self.diag_entry(basis, i)).collect()
    }

    fn diag_entry(&self, basis: &FockBasis, i: usize) -> f64 {
        let (level, c) = basis.state(i);
        let sz = level.sz();
        let mut d = 0.5 * self.omega_z * sz + self.constant;
        for &(m, n) in basis.occupations(c) {
            d += self.omegas[m as usize] * n as f64;
            if let Some(p) = &self.pair {
                d += p.coeff * sz * (-2.0) * p.xi[m as usize].norm_sqr() * n as f64;
            }
        }
        d
    }

    /// Emits `(row, H[row, j])` for every non-zero in column `j`.
    fn column<F: FnMut(usize, Complex64)>(&self, basis: &FockBasis, j: usize, mut emit: F) {
        let (level, c) = basis.state(j);
        emit(j, Complex64::new(self.diag_entry(basis, j), 0.0));
        let other = match level {
            Level::Ground => Level::Excited,
            Level::Excited => Level::Ground,
        };
        // lowering: (α σ+ + β σ−) a_k
        for &(m, n) in basis.occupations(c) {
            let k = m as usize;
            let coef = match level {
                Level::Ground => self.alpha[k],
                Level::Excited => self.beta[k],
            };
            if coef != ZERO {
                if let Some(c2) = basis.lower(c, k) {
                    emit(basis.index(other, c2), coef * (n as f64).sqrt());
                }
            }
        }
        // raising: (α* σ− + β* σ+) a_k†
        if basis.photon_number(c) < basis.n_max() {
            for k in 0..self.omegas.len() {
                let coef = match level {
                    Level::Ground => self.beta[k].conj(),
                    Level::Excited => self.alpha[k].conj(),
                };
                if coef != ZERO {
                    if let Some(c2) = basis.raise(c, k) {
                        let n = basis.occupation(c, k) as f64;
                        emit(basis.index(other, c2), coef * (n + 1.0).sqrt());
                    }
                }
            }
        }
        if let Some(p) = &self.pair {
            let q = p.coeff * level.sz();
            let xi = &p.xi;
            let occ = basis.occupations(c);
            // B†B†
            if basis.photon_number(c) + 2 <= basis.n_max() {
                for a in 0..xi.len() {
                    if xi[a] == ZERO {
                        continue;
                    }
                    let na = basis.occupation(c, a) as f64;
                    let Some(c1) = basis.raise(c, a) else { continue };
                    for b in a..xi.len() {
                        if xi[b] == ZERO {
                            continue;
                        }
                        let Some(c2) = basis.raise(c1, b) else { continue };
                        let v = if a == b {
                            xi[a].conj() * xi[a].conj() * ((na + 1.0) * (na + 2.0)).sqrt()
                        } else {
                            let nb = basis.occupation(c, b) as f64;
                            2.0 * xi[a].conj() * xi[b].conj() * ((na + 1.0) * (nb + 1.0)).sqrt()
                        };
                        emit(basis.index(level, c2), q * v);
                    }
                }
            }
            // BB
            for (ia, &(ma, na)) in occ.iter().enumerate() {
                let a = ma as usize;
                let na = na as f64;
                let Some(c1) = basis.lower(c, a) else { continue };
                if na >= 2.0 {
                    if let Some(c2) = basis.lower(c1, a) {
                        emit(basis.index(level, c2), q * xi[a] * xi[a] * (na * (na - 1.0)).sqrt());
                    }
                }
                for &(mb, nb) in &occ[ia + 1..] {
                    let b = mb as usize;
                    if let Some(c2) = basis.lower(c1, b) {
                        emit(
                            basis.index(level, c2),
                            q * 2.0 * xi[a] * xi[b] * (na * nb as f64).sqrt(),
                        );
                    }
                }
            }
            // −2 B†B, off-diagonal part
            for &(mk, nk) in occ {
                let k = mk as usize;
                if xi[k] == ZERO {
                    continue;
                }
                let Some(c1) = basis.lower(c, k) else { continue };
                for jm in 0..xi.len() {
                    if jm == k || xi[jm] == ZERO {
                        continue;
                    }
                    let nj = basis.occupation(c, jm) as f64;
                    if let Some(c2) = basis.raise(c1, jm) {
                        emit(
                            basis.index(level, c2),
                            q * (-2.0) * xi[jm].conj() * xi[k] * (nk as f64 * (nj + 1.0)).sqrt(),
                        );
                    }
                }
            }
        }
    }

    pub fn to_sparse(&self, basis: &FockBasis) -> SparseOperator {
        self.check(basis);
        let triplets: Vec<(usize, usize, Complex64)> = (0..basis.dim())
            .into_par_iter()
            .flat_map_iter(|j| {
                let mut col = Vec::new();
                self.column(basis, j, |r, v| col.push((r, j, v)));
                col
            })
            .collect();
        SparseOperator::from_triplets(basis.dim(), triplets)
    }

    /// `out = H ψ`, gathering row `i` as the conjugate of column `i`.
    pub fn apply_into(&self, basis: &FockBasis, psi: &[Complex64], out: &mut [Complex64]) {
        self.check(basis);
        let row = |i: usize| {
            let mut acc = ZERO;
            self.column(basis, i, |r, v| acc += v.conj() * psi[r]);
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
}

/// Terms of `H = (ω_e/2)σ_z + Σ ω a†a + Σ (g* a† + g a) σ_x` at time `t`.
pub fn original_terms(grid: &ModeGrid, profile: &CouplingProfile, t: f64) -> Result<FieldTerms> {
    let g: Vec<Complex64> = grid
        .modes
        .iter()
        .map(|m| eval_g(profile, &grid.geometry, m, t))
        .collect::<Result<_>>()?;
    Ok(FieldTerms {
        omega_z: profile.omega_e,
        omegas: grid.modes.iter().map(|m| m.omega).collect(),
        alpha: g.clone(),
        beta: g,
        pair: None,
        constant: 0.0,
    })
}

/// Terms of the transformed Hamiltonian. `include_phase` adds `E(t)` to the
/// full second-order variant.
pub fn transformed_terms(frame: &DressedFrame, t: f64, variant: Variant, include_phase: bool) -> Result<FieldTerms> {
    let grid = frame.grid;
    let we = frame.omega_e();
    let omegas: Vec<f64> = grid.modes.iter().map(|m| m.omega).collect();
    let xi = frame.xi_all(t)?;
    match variant {
        Variant::FullOrder2 => {
            let xi_dot = frame.xi_dot_all(t)?;
            let g: Vec<Complex64> = (0..grid.len()).map(|k| frame.g(k, t)).collect::<Result<_>>()?;
            let mut alpha = Vec::with_capacity(xi.len());
            let mut beta = Vec::with_capacity(xi.len());
            let mut phase = ZERO;
            for k in 0..xi.len() {
                let common = g[k] - I * xi_dot[k];
                alpha.push((we - omegas[k]) * xi[k] + common);
                beta.push((-we - omegas[k]) * xi[k] + common);
                phase += phase_term(xi[k], xi_dot[k], g[k], omegas[k]);
            }
            let s: f64 = xi.iter().map(|x| x.norm_sqr()).sum();
            Ok(FieldTerms {
                omega_z: we - 2.0 * we * s,
                omegas,
                alpha,
                beta,
                pair: Some(PairTerm { coeff: we, xi }),
                constant: if include_phase { phase.re } else { 0.0 },
            })
        }
        Variant::NormalOrdered | Variant::H0H1Only => {
            let eta: Vec<Complex64> = xi.iter().map(|x| x * (2.0 * we)).collect();
            let n = eta.len();
            let we_p = frame.omega_e_prime_at(t)?;
            Ok(FieldTerms {
                omega_z: we_p,
                omegas,
                alpha: eta,
                beta: vec![ZERO; n],
                pair: (variant == Variant::NormalOrdered).then_some(PairTerm { coeff: we, xi }),
                constant: 0.0,
            })
        }
    }
}

pub fn build_original_hamiltonian(
    basis: &FockBasis,
    grid: &ModeGrid,
    profile: &CouplingProfile,
    t: f64,
) -> Result<SparseOperator> {
    check_modes(basis, grid)?;
    Ok(original_terms(grid, profile, t)?.to_sparse(basis))
}

pub fn build_transformed_hamiltonian(
    basis: &FockBasis,
    frame: &DressedFrame,
    t: f64,
    variant: Variant,
) -> Result<SparseOperator> {
    check_modes(basis, frame.grid)?;
    Ok(transformed_terms(frame, t, variant, true)?.to_sparse(basis))
}

pub(crate) fn check_modes(basis: &FockBasis, grid: &ModeGrid) -> Result<()> {
    if basis.n_modes() != grid.len() {
        return Err(Error::InvalidConfig(format!(
            "basis has {} modes, grid has {}",
            basis.n_modes(),
            grid.len()
        )));
    }
    Ok(())
}

/// A Hamiltonian that can act on a state at any time.
pub trait TimeDependentOperator: Sync {
    fn dim(&self) -> usize;

    /// `out = H(t) ψ`.
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()>;

    /// Time-independent real diagonal removed analytically in the
    /// interaction picture.
    fn reference_diagonal(&self) -> Vec<f64>;
}

impl TimeDependentOperator for SparseOperator {
    fn dim(&self) -> usize {
        SparseOperator::dim(self)
    }

    fn apply(&self, _t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.apply_into(psi, out);
        Ok(())
    }

    fn reference_diagonal(&self) -> Vec<f64> {
        self.diagonal().iter().map(|d| d.re).collect()
    }
}

/// Original-frame `H(t)` evaluated on the fly.
pub struct OriginalHamiltonian<'a> {
    pub basis: &'a FockBasis,
    pub grid: &'a ModeGrid,
    pub profile: &'a CouplingProfile,
}

impl<'a> OriginalHamiltonian<'a> {
    pub fn new(basis: &'a FockBasis, grid: &'a ModeGrid, profile: &'a CouplingProfile) -> Result<Self> {
        check_modes(basis, grid)?;
        Ok(OriginalHamiltonian { basis, grid, profile })
    }
}

impl TimeDependentOperator for OriginalHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        original_terms(self.grid, self.profile, t)?.apply_into(self.basis, psi, out);
        Ok(())
    }

    fn reference_diagonal(&self) -> Vec<f64> {
        FieldTerms::free(self.profile.omega_e, self.grid.modes.iter().map(|m| m.omega).collect()).diagonal(self.basis)
    }
}

/// Transformed-frame Hamiltonian evaluated on the fly.
pub struct TransformedHamiltonian<'a> {
    pub basis: &'a FockBasis,
    pub frame: &'a DressedFrame<'a>,
    pub variant: Variant,
    pub include_phase: bool,
}

impl<'a> TransformedHamiltonian<'a> {
    pub fn new(basis: &'a FockBasis, frame: &'a DressedFrame<'a>, variant: Variant) -> Result<Self> {
        check_modes(basis, frame.grid)?;
        Ok(TransformedHamiltonian {
            basis,
            frame,
            variant,
            include_phase: true,
        })
    }
}

impl TimeDependentOperator for TransformedHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        transformed_terms(self.frame, t, self.variant, self.include_phase)?.apply_into(self.basis, psi, out);
        Ok(())
    }

    fn reference_diagonal(&self) -> Vec<f64> {
        FieldTerms::free(
            self.frame.omega_e(),
            self.frame.grid.modes.iter().map(|m| m.omega).collect(),
        )
        .diagonal(self.basis)
    }
}

/// Constant [`FieldTerms`] bound to a basis.
pub struct StaticTerms<'a> {
    pub basis: &'a FockBasis,
    pub terms: FieldTerms,
}

impl TimeDependentOperator for StaticTerms<'_> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, _t: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.terms.apply_into(self.basis, psi, out);
        Ok(())
    }

    fn reference_diagonal(&self) -> Vec<f64> {
        self.terms.diagonal(self.basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{Envelope, Trajectory};
    use crate::fock::basis::enumerate_basis;
    use crate::modes::{build_freespace_quadrature, build_waveguide_grid};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let grid = build_waveguide_grid(2, 1.0, 2.0 * PI, 1.0).unwrap();
        let p = CouplingProfile::waveguide(0.0, 1.0).unwrap();
        let b = enumerate_basis(2, 2).unwrap();
        let h = build_original_hamiltonian(&b, &grid, &p, 0.0).unwrap();
        assert_eq!(h.nnz(), b.dim());
        for i in 0..b.dim() {
            let (level, cfg) = b.state(i);
            let e = 0.5 * level.sz() + b.photon_number(cfg) as f64;
            assert!((h.get(i, i).re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn single_mode_matrix_elements() {
        let grid = build_waveguide_grid(2, 1.0, 2.0 * PI, 1.0).unwrap();
        let b = enumerate_basis(2, 1).unwrap();
        let p = CouplingProfile::waveguide(0.3, 1.0).unwrap();
        let h = build_original_hamiltonian(&b, &grid, &p, 0.0).unwrap();
        let g = eval_g(&p, &grid.geometry, &grid.modes[0], 0.0).unwrap();
        let e0 = b.index_of(Level::Excited, &[0, 0]).unwrap();
        let g1 = b.index_of(Level::Ground, &[1, 0]).unwrap();
        let e1 = b.index_of(Level::Excited, &[1, 0]).unwrap();
        let g0 = b.index_of(Level::Ground, &[0, 0]).unwrap();
        assert_eq!(h.get(e0, g1), g);
        assert_eq!(h.get(e1, g0), g.conj());
        assert!(h.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn random_profiles_are_hermitian() {
        let grid = build_freespace_quadrature(2, 2, 2, 0.5, 10.0).unwrap();
        let b = enumerate_basis(grid.len(), 2).unwrap();
        let p = CouplingProfile::oscillating_3d(
            0.7,
            [0.3, 0.1, 1.0],
            1.0,
            Trajectory {
                r_m: 0.5,
                omega_m: 0.1,
                r_hat: [0.0, 1.0, 1.0],
            },
        )
        .unwrap()
        .with_envelope(Envelope::Sinusoidal {
            depth: 0.2,
            omega: 0.05,
        });
        for t in [0.0, 3.3, 17.0] {
            let h = build_original_hamiltonian(&b, &grid, &p, t).unwrap();
            assert!(h.hermiticity_defect() < 1e-13);
            let frame = DressedFrame::adiabatic(&grid, &p);
            for v in [Variant::FullOrder2, Variant::NormalOrdered, Variant::H0H1Only] {
                let ht = build_transformed_hamiltonian(&b, &frame, t, v).unwrap();
                assert!(ht.hermiticity_defect() < 1e-13);
            }
        }
    }

    #[test]
    fn gather_matches_sparse_product() {
        let grid = build_waveguide_grid(6, 3.0, 2.0 * PI, 1.0).unwrap();
        let p = CouplingProfile::waveguide(0.4, 1.0).unwrap();
        let frame = DressedFrame::adiabatic(&grid, &p);
        let b = enumerate_basis(6, 3).unwrap();
        let terms = transformed_terms(&frame, 0.0, Variant::FullOrder2, true).unwrap();
        let h = terms.to_sparse(&b);
        let psi: Vec<Complex64> = (0..b.dim())
            .map(|i| c((i as f64).sin(), (0.3 * i as f64).cos()))
            .collect();
        let mut out = vec![ZERO; b.dim()];
        terms.apply_into(&b, &psi, &mut out);
        let reference = h.apply(&psi);
        for (x, y) in out.iter().zip(&reference) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn gamma_vacuum_pair_element() {
        let grid = build_waveguide_grid(4, 2.0, 2.0 * PI, 1.0).unwrap();
        let p = CouplingProfile::waveguide(0.5, 1.0).unwrap();
        let frame = DressedFrame::adiabatic(&grid, &p);
        let b = enumerate_basis(4, 2).unwrap();
        let h = build_transformed_hamiltonian(&b, &frame, 0.0, Variant::NormalOrdered).unwrap();
        let eta = frame.eta_all(0.0).unwrap();
        let vac = b.index(Level::Ground, 0);
        let jk = b.index_of(Level::Ground, &[1, 1, 0, 0]).unwrap();
        let jj = b.index_of(Level::Ground, &[2, 0, 0, 0]).unwrap();
        let off = -2.0 * eta[0].conj() * eta[1].conj() / 4.0;
        let diag = -(2f64.sqrt()) * eta[0].conj() * eta[0].conj() / 4.0;
        assert!((h.get(jk, vac) - off).norm() < 1e-15);
        assert!((h.get(jj, vac) - diag).norm() < 1e-15);
    }

    #[test]
    fn h0h1_conserves_excitations() {
        let grid = build_waveguide_grid(4, 2.0, 2.0 * PI, 1.0).unwrap();
        let p = CouplingProfile::waveguide(0.5, 1.0).unwrap();
        let frame = DressedFrame::adiabatic(&grid, &p);
        let b = enumerate_basis(4, 2).unwrap();
        let h = build_transformed_hamiltonian(&b, &frame, 0.0, Variant::H0H1Only).unwrap();
        let e0 = b.index(Level::Excited, 0);
        for (r, col, v) in h.triplets() {
            if col == e0 && r != e0 {
                let (level, cfg) = b.state(r);
                assert_eq!(level, Level::Ground);
                assert_eq!(b.photon_number(cfg), 1);
                assert!(v.norm() > 0.0);
            }
        }
    }
}
