//! Single-photon scattering on an atom in a waveguide and the three-photon
//! emission that accompanies it.
//!
//! The incident photon is a Lorentzian packet resonant with the atom. Its
//! excited-state amplitude, the Wigner–Weisskopf decay solution and the
//! long-time three-photon tensor `C_{jkl}` are evaluated in closed form; the
//! tensor is lazy (built from per-mode factors) so probabilities over large
//! grids are summed without storing `N³` entries.

use std::f64::consts::PI;
use std::io::Write;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{eta_components, spontaneous_decay_rate, CouplingKind, CouplingProfile};
use crate::dressing::DressedFrame;
use crate::error::{Error, Result};
use crate::fock::{
    enumerate_basis, propagate_observed, FockStateVector, Level, PropagateOptions, TransformedHamiltonian, Variant,
};
use crate::modes::{Geometry, ModeGrid};
use crate::quad::{gauss_legendre, linear_fit};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn waveguide_dims(grid: &ModeGrid) -> Result<(f64, f64)> {
    match grid.geometry {
        Geometry::Waveguide1D { length, area } => Ok((length, area)),
        Geometry::FreeSpace3D { .. } => Err(Error::GeometryMismatch("scattering needs a waveguide grid".into())),
    }
}

fn check_static_waveguide(profile: &CouplingProfile) -> Result<()> {
    if profile.kind != CouplingKind::Waveguide1D {
        return Err(Error::InvalidConfig(format!(
            "scattering needs a static waveguide profile, got {:?}",
            profile.kind
        )));
    }
    Ok(())
}

/// `γ = 2π Σ_dir |η(ω_e)|² ρ(ω_e)` for a waveguide atom; the resonance must
/// lie inside the grid band.
pub fn gamma_from_coupling(grid: &ModeGrid, profile: &CouplingProfile) -> Result<f64> {
    waveguide_dims(grid)?;
    check_static_waveguide(profile)?;
    spontaneous_decay_rate(profile, grid)
}

/// Co-rotating couplings `η_k` of every grid mode for a static waveguide atom.
pub fn waveguide_etas(grid: &ModeGrid, profile: &CouplingProfile) -> Result<Vec<f64>> {
    waveguide_dims(grid)?;
    check_static_waveguide(profile)?;
    grid.modes
        .iter()
        .map(|m| Ok(eta_components(profile, &grid.geometry, m)?.eta0))
        .collect()
}

/// Incident single-photon packet `W† = Σ W_k a_k†`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavepacket {
    pub w: Vec<Complex64>,
    pub gamma_prime: f64,
    /// Carrier wavenumber, `c k_e = ω_e`.
    pub k_e: f64,
    /// Front edge of the packet (negative: left of the atom).
    pub x0: f64,
}

impl Wavepacket {
    /// `Σ |W_k|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Arrival time `|x0|/c` of the front edge at the atom.
    pub fn arrival_time(&self, c: f64) -> f64 {
        self.x0.abs() / c
    }
}

/// Lorentzian packet
/// `W_k = √(γ'/(cL)) e^{−i(k−k_e)x0} / (−i(k−k_e) + γ'/(2c))` on the
/// right-moving modes; left-movers are empty.
pub fn lorentzian_wavepacket(grid: &ModeGrid, omega_e: f64, gamma_prime: f64, x0: f64) -> Result<Wavepacket> {
    let (length, _) = waveguide_dims(grid)?;
    if !(gamma_prime > 0.0 && gamma_prime.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "gamma_prime must be positive, got {gamma_prime}"
        )));
    }
    if !(x0 < 0.0 && x0.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "packet front x0 must be negative, got {x0}"
        )));
    }
    if gamma_prime > 0.1 * omega_e {
        warn!("gamma' = {gamma_prime} is not small compared with omega_e = {omega_e}");
    }
    let c = grid.c;
    if x0.abs() < 10.0 * c / gamma_prime {
        warn!("|x0| = {} is below 10 c/gamma' = {}", x0.abs(), 10.0 * c / gamma_prime);
    }
    let k_e = omega_e / c;
    let amp = (gamma_prime / (c * length)).sqrt();
    let kappa = gamma_prime / (2.0 * c);
    let w = grid
        .modes
        .iter()
        .map(|m| {
            if m.direction_sign != Some(1) {
                return ZERO;
            }
            let q = m.wavevector[0] - k_e;
            amp * Complex64::new(0.0, -q * x0).exp() / Complex64::new(kappa, -q)
        })
        .collect();
    Ok(Wavepacket {
        w,
        gamma_prime,
        k_e,
        x0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarPacketReport {
    /// `|x0| ≥ 10 c/γ'`.
    pub distance_ok: bool,
    /// Packet norm inside `|x| ≤ 10 c/ω_e`.
    pub overlap: f64,
    pub passed: bool,
}

/// Checks that the packet starts well away from the dressing cloud, so that
/// it commutes with the frame change.
pub fn far_packet_check(packet: &Wavepacket, grid: &ModeGrid, omega_e: f64) -> Result<FarPacketReport> {
    let (length, _) = waveguide_dims(grid)?;
    let c = grid.c;
    let reach = 10.0 * c / omega_e;
    let distance_ok = packet.x0.abs() >= 10.0 * c / packet.gamma_prime;
    // ψ(x) = Σ W_k e^{ikx} / √L, integrated over the cloud region.
    let nodes = gauss_legendre(64, -reach, reach);
    let parts: Vec<f64> = nodes
        .par_iter()
        .map(|&(x, wx)| {
            let psi: Complex64 = grid
                .modes
                .iter()
                .zip(&packet.w)
                .filter(|(_, w)| **w != ZERO)
                .map(|(m, w)| w * Complex64::new(0.0, m.wavevector[0] * x).exp())
                .sum();
            wx * psi.norm_sqr() / length
        })
        .collect();
    let overlap: f64 = parts.iter().sum();
    Ok(FarPacketReport {
        distance_ok,
        overlap,
        passed: distance_ok && overlap < 1e-6,
    })
}

/// Spontaneous decay of `|e, 0⟩` in the single-excitation sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayAmplitudes {
    pub t: f64,
    pub excited: Complex64,
    pub modes: Vec<Complex64>,
}

impl DecayAmplitudes {
    /// `|c_e|² + Σ|c_k|²`.
    pub fn total_probability(&self) -> f64 {
        self.excited.norm_sqr() + self.modes.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// Wigner–Weisskopf amplitudes
/// `c_e = e^{(−γ−iω_e)t/2}`,
/// `c_k = −i η_k* e^{−iω_e t/2} (e^{−iΔ_k t} − e^{−γt/2}) / (γ/2 − iΔ_k)`,
/// `Δ_k = ω_k − ω_e`. The leading `−i` is the phase fixed by the Schrödinger
/// equation `i ċ_k = … + η_k* c_e`.
pub fn decay_amplitudes(grid: &ModeGrid, profile: &CouplingProfile, gamma: f64, t: f64) -> Result<DecayAmplitudes> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("decay rate must be >= 0, got {gamma}")));
    }
    let we = profile.omega_e;
    let eta = waveguide_etas(grid, profile)?;
    let carrier = Complex64::new(-0.5 * gamma * t, -0.5 * we * t).exp();
    let rot = Complex64::new(0.0, -0.5 * we * t).exp();
    let decay = (-0.5 * gamma * t).exp();
    let modes = grid
        .modes
        .iter()
        .zip(&eta)
        .map(|(m, &e)| {
            let delta = m.omega - we;
            let num = Complex64::new(0.0, -delta * t).exp() - decay;
            -I * e * rot * num / Complex64::new(0.5 * gamma, -delta)
        })
        .collect();
    Ok(DecayAmplitudes {
        t,
        excited: carrier,
        modes,
    })
}

/// Wigner–Weisskopf decay reproduced by the truncated-space oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOracleReport {
    pub gamma_expected: f64,
    /// `−2 ×` slope of `ln |c_e(t)|`.
    pub gamma_fit: f64,
    pub rel_error: f64,
    pub r_squared: f64,
    /// `‖c^oracle − c^WW‖ / ‖c^WW‖` over the mode amplitudes at the last time.
    pub rms_mode_deviation: f64,
    pub times: Vec<f64>,
    pub excited_abs: Vec<f64>,
    pub norm_drift: f64,
}

/// Propagates `|e, 0⟩` under `H0 + H1` (one excitation) and fits the decay of
/// the excited amplitude at `samples` times spread over `(t_max/8, t_max]`.
pub fn oracle_decay(
    grid: &ModeGrid,
    profile: &CouplingProfile,
    t_max: f64,
    samples: usize,
    opts: &PropagateOptions,
) -> Result<DecayOracleReport> {
    if samples < 2 || !(t_max > 0.0) {
        return Err(Error::InvalidConfig(
            "decay fit needs t_max > 0 and at least two samples".into(),
        ));
    }
    let gamma = gamma_from_coupling(grid, profile)?;
    let basis = enumerate_basis(grid.len(), 1)?;
    let frame = DressedFrame::adiabatic(grid, profile);
    let h = TransformedHamiltonian::new(&basis, &frame, Variant::H0H1Only)?;
    let psi0 = FockStateVector::vacuum(&basis, Level::Excited);
    let e_index = basis.index(Level::Excited, 0);
    let times: Vec<f64> = (0..samples)
        .map(|i| t_max / 8.0 + (t_max - t_max / 8.0) * i as f64 / (samples - 1) as f64)
        .collect();
    let mut excited_abs = Vec::with_capacity(samples);
    let report = propagate_observed(&h, &psi0, 0.0, &times, opts, |_, s| {
        excited_abs.push(s.amplitudes[e_index].norm());
        Ok(())
    })?;
    let logs: Vec<f64> = excited_abs.iter().map(|a| a.ln()).collect();
    let (slope, _, r_squared) = linear_fit(&times, &logs);
    let gamma_fit = -2.0 * slope;

    let ww = decay_amplitudes(grid, profile, gamma, t_max)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, c) in ww.modes.iter().enumerate() {
        let idx = basis.index(Level::Ground, k + 1);
        num += (report.state.amplitudes[idx] - c).norm_sqr();
        den += c.norm_sqr();
    }
    Ok(DecayOracleReport {
        gamma_expected: gamma,
        gamma_fit,
        rel_error: (gamma_fit - gamma).abs() / gamma,
        r_squared,
        rms_mode_deviation: (num / den).sqrt(),
        times,
        excited_abs,
        norm_drift: report.norm_drift,
    })
}

/// Excited-state amplitude while a Lorentzian packet of width `γ'` is
/// absorbed, with `τ` measured from the arrival of its front edge:
/// `[2i√(γ'γ)/(γ−γ')] (e^{−γτ/2} − e^{−γ'τ/2}) e^{−iω_e τ/2}`, switching to
/// the limit `−i√(γγ') τ e^{−γτ/2} e^{−iω_e τ/2}` when `|γ − γ'| < 1e-6 γ`.
pub fn excited_amplitude_scattering(gamma: f64, gamma_prime: f64, omega_e: f64, tau: f64) -> Result<Complex64> {
    if !(gamma > 0.0) || !(gamma_prime > 0.0) {
        return Err(Error::Domain(format!(
            "rates must be positive, got gamma = {gamma}, gamma' = {gamma_prime}"
        )));
    }
    if tau < 0.0 {
        return Ok(ZERO);
    }
    let phase = Complex64::new(0.0, -0.5 * omega_e * tau).exp();
    let root = (gamma * gamma_prime).sqrt();
    if (gamma - gamma_prime).abs() < 1e-6 * gamma {
        let g = 0.5 * (gamma + gamma_prime);
        return Ok(-I * root * tau * (-0.5 * g * tau).exp() * phase);
    }
    let diff = (-0.5 * gamma * tau).exp() - (-0.5 * gamma_prime * tau).exp();
    Ok(2.0 * I * root / (gamma - gamma_prime) * diff * phase)
}

/// Long-time three-photon amplitude
/// `C_{jkl} = [√(γ'γ)/(2ω_e)] η_j η_k η_l / [(iΔ_l − γ/2)(iΔ_{jkl} − γ/2)(iΔ_{jkl} − γ'/2)]`
/// held as per-mode factors.
///
/// The `t0`-dependent phase `e^{−i(ω_{jkl} − ω_e/2)(t − t0)}` is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhotonTensor {
    pub omegas: Vec<f64>,
    pub eta: Vec<f64>,
    pub omega_e: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// Arrival time `|x0|/c`, kept as metadata.
    pub t0: f64,
    /// Uniform frequency lattice of the grid, enabling the convolution sums.
    pub spacing: Option<f64>,
}

/// Builds the lazy tensor for a static waveguide atom. `gamma_prime = 0`
/// (no incident photon) gives an identically zero tensor.
pub fn three_photon_coefficients(
    grid: &ModeGrid,
    profile: &CouplingProfile,
    gamma: f64,
    gamma_prime: f64,
    t0: f64,
) -> Result<ThreePhotonTensor> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(gamma_prime >= 0.0) {
        return Err(Error::Domain(format!("gamma' must be >= 0, got {gamma_prime}")));
    }
    let eta = waveguide_etas(grid, profile)?;
    Ok(ThreePhotonTensor {
        omegas: grid.modes.iter().map(|m| m.omega).collect(),
        eta,
        omega_e: profile.omega_e,
        gamma,
        gamma_prime,
        t0,
        spacing: grid.uniform_spacing(),
    })
}

impl ThreePhotonTensor {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    fn prefactor(&self) -> f64 {
        (self.gamma * self.gamma_prime).sqrt() / (2.0 * self.omega_e)
    }

    /// `1/(iΔ − γ/2)`.
    fn single(&self, delta: f64) -> Complex64 {
        1.0 / Complex64::new(-0.5 * self.gamma, delta)
    }

    /// `1/[(iD − γ/2)(iD − γ'/2)]`.
    fn double(&self, d: f64) -> Complex64 {
        1.0 / (Complex64::new(-0.5 * self.gamma, d) * Complex64::new(-0.5 * self.gamma_prime, d))
    }

    fn delta_sum(&self, j: usize, k: usize, l: usize) -> f64 {
        self.omegas[j] + self.omegas[k] + self.omegas[l] - self.omega_e
    }

    /// Unsymmetrized coefficient (the last index is the photon emitted by the
    /// decay).
    pub fn raw(&self, j: usize, k: usize, l: usize) -> Complex64 {
        let d = self.delta_sum(j, k, l);
        // η_j η_k multiplied first so that j ↔ k is bit-exact.
        self.prefactor()
            * (self.eta[j] * self.eta[k])
            * self.eta[l]
            * self.single(self.omegas[l] - self.omega_e)
            * self.double(d)
    }

    /// Average of [`raw`](Self::raw) over the six index orders.
    pub fn symmetrized(&self, j: usize, k: usize, l: usize) -> Complex64 {
        let d = self.delta_sum(j, k, l);
        let f = |i: usize| self.single(self.omegas[i] - self.omega_e);
        self.prefactor() * self.eta[j] * self.eta[k] * self.eta[l] * self.double(d) * (f(j) + f(k) + f(l)) / 3.0
    }

    /// `P₃ = ‖Σ C_{jkl} a_j† a_k† a_l† |0⟩‖² = 6 Σ_{jkl} |C^sym_{jkl}|²`, by
    /// the convolution sum on a uniform lattice and by direct summation
    /// otherwise.
    pub fn probability(&self) -> f64 {
        match self.spacing {
            Some(_) => self.lattice_sums(None).0,
            None => self.probability_direct(),
        }
    }

    /// Direct `O(N³)` sum, parallel over the first index with a fixed
    /// reduction order.
    pub fn probability_direct(&self) -> f64 {
        let n = self.len();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s += self.symmetrized(j, k, l).norm_sqr();
                    }
                }
                s
            })
            .collect();
        6.0 * rows.iter().sum::<f64>()
    }

    /// Lattice index of every mode.
    fn lattice(&self) -> Option<(f64, Vec<usize>)> {
        let dw = self.spacing?;
        Some((dw, self.omegas.iter().map(|w| (w / dw).round() as usize).collect()))
    }

    /// `(P₃ restricted to |Δ_jkl| ≤ window, Σ_s ω_s w_s, Σ_s w_s)`, where
    /// `w_s` is the probability on the three-photon shell `ω_{jkl} = s Δω`.
    ///
    /// With `S_{jkl} ∝ η_j η_k η_l h(Δ_{jkl}) (f_j + f_k + f_l)`,
    /// `Σ |S|²` splits into `3 (a∗a∗b)(s) + 6 Re (c∗c̄∗a)(s)` with
    /// `a = Σ|η|²`, `b = Σ|η|²|f|²`, `c = Σ|η|² f` per lattice site.
    fn lattice_sums(&self, window: Option<f64>) -> (f64, f64, f64) {
        let (dw, idx) = self.lattice().expect("lattice sums need a uniform grid");
        let m = idx.iter().copied().max().unwrap_or(0) + 1;
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        let mut c = vec![ZERO; m];
        for (i, &n) in idx.iter().enumerate() {
            let e2 = self.eta[i] * self.eta[i];
            let f = self.single(self.omegas[i] - self.omega_e);
            a[n] += e2;
            b[n] += e2 * f.norm_sqr();
            c[n] += f * e2;
        }
        let aa = convolve_real(&a, &a);
        let aab = convolve_real(&aa, &b);
        let cc = convolve_complex(&c, &c.iter().map(|z| z.conj()).collect::<Vec<_>>());
        let cca = convolve_complex(&cc, &a.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>());
        let pref = self.prefactor();
        let scale = 6.0 * pref * pref / 9.0;
        let (mut p, mut first, mut total) = (0.0, 0.0, 0.0);
        for s in 0..aab.len() {
            let omega = s as f64 * dw;
            let d = omega - self.omega_e;
            let w = scale * self.double(d).norm_sqr() * (3.0 * aab[s] + 6.0 * cca[s].re);
            total += w;
            first += omega * w;
            if window.is_none_or(|win| d.abs() <= win) {
                p += w;
            }
        }
        (p, first, total)
    }

    /// Fraction of `P₃` on shells with `|Δ_jkl| ≤ window`.
    pub fn mass_fraction(&self, window: f64) -> f64 {
        if self.spacing.is_some() {
            let (inside, _, total) = self.lattice_sums(Some(window));
            return if total > 0.0 { inside / total } else { 0.0 };
        }
        let n = self.len();
        let (mut inside, mut total) = (0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let w = self.symmetrized(j, k, l).norm_sqr();
                    total += w;
                    if self.delta_sum(j, k, l).abs() <= window {
                        inside += w;
                    }
                }
            }
        }
        if total > 0.0 {
            inside / total
        } else {
            0.0
        }
    }

    /// `⟨ω_j + ω_k + ω_l⟩` under the `|C^sym|²` weight.
    pub fn mean_energy(&self) -> f64 {
        if self.spacing.is_some() {
            let (_, first, total) = self.lattice_sums(None);
            return first / total;
        }
        let n = self.len();
        let (mut first, mut total) = (0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let w = self.symmetrized(j, k, l).norm_sqr();
                    total += w;
                    first += w * (self.omegas[j] + self.omegas[k] + self.omegas[l]);
                }
            }
        }
        first / total
    }

    /// `|C_{jjl}|` (raw) on the energy shell `2ω_j + ω_l = ω_e`, for right-moving
    /// `j` and every `l` with `ω_l` in `(lo, hi)`. Needs a uniform lattice with
    /// `ω_e` on it; only sites where the shell is hit exactly are returned.
    pub fn on_shell_profile(&self, directions: &[Option<i8>], lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        let (dw, idx) = self
            .lattice()
            .ok_or_else(|| Error::InvalidConfig("on-shell profile needs a uniform lattice".into()))?;
        let n_e = self.omega_e / dw;
        if (n_e - n_e.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig("omega_e is not on the frequency lattice".into()));
        }
        let n_e = n_e.round() as i64;
        let mut right = std::collections::HashMap::new();
        for (i, &n) in idx.iter().enumerate() {
            if directions.get(i).copied().flatten() == Some(1) {
                right.insert(n as i64, i);
            }
        }
        let mut out = Vec::new();
        for (l, &nl) in idx.iter().enumerate() {
            let w = self.omegas[l];
            if !(w > lo && w < hi) || directions.get(l).copied().flatten() != Some(1) {
                continue;
            }
            let rest = n_e - nl as i64;
            if rest <= 0 || rest % 2 != 0 {
                continue;
            }
            if let Some(&j) = right.get(&(rest / 2)) {
                out.push((w, self.raw(j, j, l).norm()));
            }
        }
        Ok(out)
    }

    /// Slice `C_{jk·}` over `l` as CSV (omega_j, omega_k, omega_l, re, im, abs2)
    /// for the raw and symmetrized tensors.
    pub fn write_slice_csv<W: Write>(&self, j: usize, k: usize, mut w: W) -> Result<()> {
        writeln!(w, "omega_j,omega_k,omega_l,re,im,abs2,sym_re,sym_im,sym_abs2")?;
        for l in 0..self.len() {
            let c = self.raw(j, k, l);
            let s = self.symmetrized(j, k, l);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.omegas[j],
                self.omegas[k],
                self.omegas[l],
                c.re,
                c.im,
                c.norm_sqr(),
                s.re,
                s.im,
                s.norm_sqr()
            )?;
        }
        Ok(())
    }
}

fn convolve_real(x: &[f64], y: &[f64]) -> Vec<f64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let n = x.len() + y.len() - 1;
    (0..n)
        .into_par_iter()
        .map(|s| {
            let lo = s.saturating_sub(y.len() - 1);
            let hi = s.min(x.len() - 1);
            (lo..=hi).map(|i| x[i] * y[s - i]).sum()
        })
        .collect()
}

fn convolve_complex(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let n = x.len() + y.len() - 1;
    (0..n)
        .into_par_iter()
        .map(|s| {
            let lo = s.saturating_sub(y.len() - 1);
            let hi = s.min(x.len() - 1);
            (lo..=hi).map(|i| x[i] * y[s - i]).sum()
        })
        .collect()
}

/// Scattering summary written by the runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSummary {
    pub p3: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub mass_fraction: f64,
    pub mass_window: f64,
    pub mean_energy: f64,
    pub n_modes: usize,
    pub length: f64,
    pub spacing: Option<f64>,
    pub packet_norm: f64,
    pub far_packet: FarPacketReport,
    pub phase_convention: String,
}

pub const PHASE_CONVENTION: &str = "t0-dependent phase exp(-i(w_jkl - w_e/2)(t - t0)) dropped from stored coefficients";

/// Peak `|W|` of a Lorentzian packet, `√(γ'/(cL))·(2c/γ')`.
pub fn lorentzian_peak(gamma_prime: f64, c: f64, length: f64) -> f64 {
    (gamma_prime / (c * length)).sqrt() * 2.0 * c / gamma_prime
}

/// `(2/π) atan(B/γ)`: fraction of a decayed excitation emitted into the band
/// `|ω − ω_e| ≤ B` in the continuum limit.
pub fn band_fraction(gamma: f64, half_band: f64) -> f64 {
    2.0 / PI * (2.0 * half_band / gamma).atan()
}
