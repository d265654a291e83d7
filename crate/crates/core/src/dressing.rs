//! The time-dependent dressing frame `T(t) = exp[σ_x X(t)]` with
//! `X = Σ_k (ξ_k* a_k† − ξ_k a_k)`.
//!
//! `ξ_k(t)` is either the exact solution of the counter-rotating balance
//! `−iξ̇ = (ω_k + ω_e) ξ − g` or its adiabatic limit `g/(ω_k + ω_e)`. From it
//! follow `η_k = 2ω_e ξ_k`, the pair matrix `Λ_{kk'} = η_k* η_k'* / (4ω_e')`,
//! the dressed-vacuum pair amplitudes and the c-number phase `E(t)`.

use std::io::Write;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{eval_g, eval_g_with_derivative, CouplingProfile};
use crate::error::{Error, Result};
use crate::modes::ModeGrid;
use crate::quad::{integrate_adaptive, oscillation_segments, Tolerance};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Above this `Σ|ξ|²` the second-order expansion is flagged.
pub const SMALLNESS_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum XiMode {
    Adiabatic,
    /// Exact solution with per-mode initial values; `None` starts from the
    /// adiabatic value `g_k(0)/(ω_k + ω_e)`.
    Exact {
        xi0: Option<Vec<Complex64>>,
    },
    /// Exact solution that repeats with the drive period; `ξ(t)` is evaluated
    /// from `t mod period`, so the cost does not grow with `t`.
    Periodic {
        period: f64,
        xi0: Vec<Complex64>,
    },
}

/// Value of `ω_e'` used in `Λ` and in the normal-ordered Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OmegaPrime {
    Fixed(f64),
    /// `ω_e (1 − 2 Σ|ξ_k(t)|²)`, the shift produced by normal ordering `X²`.
    Shifted,
}

#[derive(Debug, Clone)]
pub struct DressedFrame<'a> {
    pub grid: &'a ModeGrid,
    pub profile: &'a CouplingProfile,
    pub mode: XiMode,
    pub omega_e_prime: OmegaPrime,
    /// Relative tolerance of the exact-ξ quadrature.
    pub quad_rel_tol: f64,
}

impl<'a> DressedFrame<'a> {
    pub fn adiabatic(grid: &'a ModeGrid, profile: &'a CouplingProfile) -> Self {
        DressedFrame {
            grid,
            profile,
            mode: XiMode::Adiabatic,
            omega_e_prime: OmegaPrime::Fixed(profile.omega_e),
            quad_rel_tol: 1e-10,
        }
    }

    pub fn exact(grid: &'a ModeGrid, profile: &'a CouplingProfile) -> Self {
        DressedFrame {
            mode: XiMode::Exact { xi0: None },
            ..Self::adiabatic(grid, profile)
        }
    }

    /// Exact frame on the periodic orbit of a drive with the given period:
    /// `ξ0 = ξ_P / (1 − e^{iΩP})` where `ξ_P` is the response over one period
    /// started from zero.
    pub fn periodic(grid: &'a ModeGrid, profile: &'a CouplingProfile, period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "drive period must be positive, got {period}"
            )));
        }
        let base = Self::exact(grid, profile);
        let xi0 = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let denom = Complex64::new(1.0, 0.0) - Complex64::new(0.0, base.big_omega(k) * period).exp();
                if denom.norm() < 1e-8 {
                    return Err(Error::SingularConfig(format!(
                        "mode {k}: (omega_k + omega_e) * period is a multiple of 2 pi"
                    )));
                }
                Ok(xi_exact(&base, k, period, Complex64::new(0.0, 0.0))? / denom)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DressedFrame {
            mode: XiMode::Periodic { period, xi0 },
            ..base
        })
    }

    pub fn with_xi0(mut self, xi0: Vec<Complex64>) -> Result<Self> {
        if xi0.len() != self.grid.len() {
            return Err(Error::InvalidConfig(format!(
                "xi0 has {} entries for {} modes",
                xi0.len(),
                self.grid.len()
            )));
        }
        self.mode = XiMode::Exact { xi0: Some(xi0) };
        Ok(self)
    }

    pub fn with_omega_e_prime(mut self, w: OmegaPrime) -> Self {
        self.omega_e_prime = w;
        self
    }

    pub fn omega_e(&self) -> f64 {
        self.profile.omega_e
    }

    fn big_omega(&self, k: usize) -> f64 {
        self.grid.modes[k].omega + self.profile.omega_e
    }

    pub fn g(&self, k: usize, t: f64) -> Result<Complex64> {
        eval_g(self.profile, &self.grid.geometry, &self.grid.modes[k], t)
    }

    /// `ξ_k(t)` in the frame's mode.
    pub fn xi(&self, k: usize, t: f64) -> Result<Complex64> {
        match &self.mode {
            XiMode::Adiabatic => xi_adiabatic(self, k, t),
            XiMode::Exact { xi0 } => {
                let x0 = match xi0 {
                    Some(v) => v[k],
                    None => xi_adiabatic(self, k, 0.0)?,
                };
                xi_exact(self, k, t, x0)
            }
            XiMode::Periodic { period, xi0 } => xi_exact(self, k, t.rem_euclid(*period), xi0[k]),
        }
    }

    /// `dξ_k/dt`. Adiabatic: `ġ/(ω_k + ω_e)` from the analytic derivative of
    /// `g`. Exact: `i[(ω_k + ω_e) ξ − g]` from the defining equation.
    pub fn xi_dot(&self, k: usize, t: f64) -> Result<Complex64> {
        match &self.mode {
            XiMode::Adiabatic => {
                let (_, dg) = eval_g_with_derivative(self.profile, &self.grid.geometry, &self.grid.modes[k], t)?;
                Ok(dg / self.big_omega(k))
            }
            XiMode::Exact { .. } | XiMode::Periodic { .. } => {
                let xi = self.xi(k, t)?;
                Ok(I * (self.big_omega(k) * xi - self.g(k, t)?))
            }
        }
    }

    /// `η_k(t) = 2ω_e ξ_k(t)`.
    pub fn eta(&self, k: usize, t: f64) -> Result<Complex64> {
        Ok(self.xi(k, t)? * (2.0 * self.profile.omega_e))
    }

    /// `ξ` for every mode, in parallel for the exact mode.
    pub fn xi_all(&self, t: f64) -> Result<Vec<Complex64>> {
        (0..self.grid.len()).into_par_iter().map(|k| self.xi(k, t)).collect()
    }

    pub fn xi_dot_all(&self, t: f64) -> Result<Vec<Complex64>> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|k| self.xi_dot(k, t))
            .collect()
    }

    pub fn eta_all(&self, t: f64) -> Result<Vec<Complex64>> {
        let two_we = 2.0 * self.profile.omega_e;
        Ok(self.xi_all(t)?.into_iter().map(|x| x * two_we).collect())
    }

    pub fn omega_e_prime_at(&self, t: f64) -> Result<f64> {
        match self.omega_e_prime {
            OmegaPrime::Fixed(w) => Ok(w),
            OmegaPrime::Shifted => Ok(self.profile.omega_e * (1.0 - 2.0 * self.smallness(t)?)),
        }
    }

    /// `Σ_k |ξ_k(t)|²`; logs a warning above [`SMALLNESS_LIMIT`].
    pub fn smallness(&self, t: f64) -> Result<f64> {
        let s: f64 = self.xi_all(t)?.iter().map(|x| x.norm_sqr()).sum();
        if s >= SMALLNESS_LIMIT {
            warn!("sum |xi|^2 = {s:.3e} at t = {t} exceeds {SMALLNESS_LIMIT}; second-order dressing is unreliable");
        }
        Ok(s)
    }

    /// Largest `Σ|ξ|²` over the sample times.
    pub fn max_smallness(&self, times: &[f64]) -> Result<f64> {
        let mut m = 0.0f64;
        for &t in times {
            m = m.max(self.smallness(t)?);
        }
        Ok(m)
    }
}

/// `g_k(t)/(ω_k + ω_e)`.
pub fn xi_adiabatic(frame: &DressedFrame, k: usize, t: f64) -> Result<Complex64> {
    Ok(frame.g(k, t)? / frame.big_omega(k))
}

/// `ξ0 e^{iΩt} − i ∫₀ᵗ g(t') e^{iΩ(t−t')} dt'` with `Ω = ω_k + ω_e`.
pub fn xi_exact(frame: &DressedFrame, k: usize, t: f64, xi0: Complex64) -> Result<Complex64> {
    let omega = frame.big_omega(k);
    if t == 0.0 {
        return Ok(xi0);
    }
    let integral = duhamel_integral(frame, k, 0.0, t)?;
    Ok(xi0 * Complex64::new(0.0, omega * t).exp() - I * integral)
}

/// `ξ_k` at an ascending list of times, stepping the solution forward
/// interval by interval so each integral only spans one gap.
pub fn xi_exact_series(frame: &DressedFrame, k: usize, times: &[f64], xi0: Complex64) -> Result<Vec<Complex64>> {
    let omega = frame.big_omega(k);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    let mut xi = xi0;
    for &t in times {
        if t < t_prev {
            return Err(Error::InvalidConfig(
                "xi series needs ascending non-negative times".into(),
            ));
        }
        if t > t_prev {
            let step = duhamel_integral(frame, k, t_prev, t)?;
            xi = xi * Complex64::new(0.0, omega * (t - t_prev)).exp() - I * step;
        }
        out.push(xi);
        t_prev = t;
    }
    Ok(out)
}

/// `∫_{t0}^{t1} g(t') e^{iΩ(t1−t')} dt'`.
fn duhamel_integral(frame: &DressedFrame, k: usize, t0: f64, t1: f64) -> Result<Complex64> {
    let omega = frame.big_omega(k);
    if frame.profile.is_time_independent() {
        let g = frame.g(k, t0)?;
        return Ok(g * (Complex64::new(0.0, omega * (t1 - t0)).exp() - 1.0) / (I * omega));
    }
    let g_scale = frame.g(k, t0)?.norm().max(frame.g(k, t1)?.norm());
    let tol = Tolerance::relative(frame.quad_rel_tol).with_abs(1e-14 * g_scale * (t1 - t0).max(1.0 / omega));
    let mut failure = None;
    let res = integrate_adaptive(
        |s| match frame.g(k, s) {
            Ok(g) => g * Complex64::new(0.0, omega * (t1 - s)).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        t0,
        t1,
        tol,
        oscillation_segments(omega, t1 - t0),
    )
    .map_err(|e| match e {
        Error::Numerical { message, diagnostics } => Error::Numerical {
            message: format!("exact xi quadrature for mode {k}: {message}"),
            diagnostics,
        },
        other => other,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res.value)
}

/// `(−ω_e − ω_k) ξ_k + g_k − i ξ̇_k`, the coefficient left on the
/// counter-rotating terms.
pub fn counter_rotating_residual(frame: &DressedFrame, k: usize, t: f64) -> Result<Complex64> {
    let xi = frame.xi(k, t)?;
    let xi_dot = frame.xi_dot(k, t)?;
    Ok(-frame.big_omega(k) * xi + frame.g(k, t)? - I * xi_dot)
}

/// Symmetric pair matrix `Λ_{kk'}(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatrix {
    pub t: f64,
    pub lambda: DMatrix<Complex64>,
}

impl PairMatrix {
    pub fn len(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.nrows() == 0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k_index,kp_index,re,im")?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let v = self.lambda[(i, j)];
                writeln!(w, "{i},{j},{:.16e},{:.16e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .lambda
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// `Λ_{kk'}(t) = η_k*(t) η_k'*(t) / (4 ω_e')`.
pub fn lambda_matrix(frame: &DressedFrame, t: f64) -> Result<PairMatrix> {
    let we_p = frame.omega_e_prime_at(t)?;
    if we_p == 0.0 || !we_p.is_finite() {
        return Err(Error::SingularConfig(format!("omega_e' = {we_p}")));
    }
    let eta = frame.eta_all(t)?;
    Ok(PairMatrix {
        t,
        lambda: lambda_from_eta(&eta, we_p),
    })
}

pub(crate) fn lambda_from_eta(eta: &[Complex64], omega_e_prime: f64) -> DMatrix<Complex64> {
    let n = eta.len();
    let scale = 1.0 / (4.0 * omega_e_prime);
    DMatrix::from_fn(n, n, |i, j| eta[i].conj() * eta[j].conj() * scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAmplitude {
    pub k: usize,
    pub kp: usize,
    /// `Λ_{kk'}(0)/(ω_k + ω_k')`, the coefficient of `a_k† a_k'†|0⟩` in the
    /// ordered double sum.
    pub coefficient: Complex64,
    /// Amplitude on the normalized two-photon state `|1_k 1_k'⟩` or `|2_k⟩`.
    pub normalized: Complex64,
}

/// Pair content of the dressed vacuum for `k ≤ k'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTable {
    pub entries: Vec<PairAmplitude>,
    pub convention: String,
}

pub const PAIR_CONVENTION: &str =
    "ordered double sum over (k,k'); normalized amplitude is sqrt(2)*coefficient for k=k' and 2*coefficient for k<k'";

impl AmplitudeTable {
    /// Total two-photon weight `Σ |normalized|²`.
    pub fn two_photon_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.normalized.norm_sqr()).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k_index,kp_index,re,im,normalized_re,normalized_im")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.k, e.kp, e.coefficient.re, e.coefficient.im, e.normalized.re, e.normalized.im
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// First-order pair content of `|0'⟩` at `t = 0`.
pub fn ground_state_pairs(frame: &DressedFrame) -> Result<AmplitudeTable> {
    let lambda = lambda_matrix(frame, 0.0)?;
    let modes = &frame.grid.modes;
    let mut entries = Vec::new();
    for k in 0..modes.len() {
        for kp in k..modes.len() {
            let coefficient = lambda.lambda[(k, kp)] / (modes[k].omega + modes[kp].omega);
            let normalized = if k == kp {
                coefficient * std::f64::consts::SQRT_2
            } else {
                coefficient * 2.0
            };
            entries.push(PairAmplitude {
                k,
                kp,
                coefficient,
                normalized,
            });
        }
    }
    Ok(AmplitudeTable {
        entries,
        convention: PAIR_CONVENTION.to_string(),
    })
}

/// Dressing phase `E(t) = Σ_k [(i/2) ξ_k* ξ̇_k − g_k ξ_k* + c.c. + ω_k |ξ_k|²]`.
pub fn phase_e(frame: &DressedFrame, t: f64) -> Result<f64> {
    phase_e_with_cutoff(frame, t, f64::INFINITY)
}

/// [`phase_e`] restricted to modes with `ω_k ≤ omega_cut`.
pub fn phase_e_with_cutoff(frame: &DressedFrame, t: f64, omega_cut: f64) -> Result<f64> {
    let mut total = Complex64::new(0.0, 0.0);
    for (k, m) in frame.grid.modes.iter().enumerate() {
        if m.omega > omega_cut {
            continue;
        }
        let xi = frame.xi(k, t)?;
        let xi_dot = frame.xi_dot(k, t)?;
        let g = frame.g(k, t)?;
        total += phase_term(xi, xi_dot, g, m.omega);
    }
    if total.im.abs() > 1e-13 * total.re.abs().max(1e-300) && total.im.abs() > 1e-300 {
        return Err(Error::numerical("dressing phase is not real", format!("E = {total}")));
    }
    Ok(total.re)
}

pub(crate) fn phase_term(xi: Complex64, xi_dot: Complex64, g: Complex64, omega: f64) -> Complex64 {
    let a = 0.5 * I * xi.conj() * xi_dot - g * xi.conj();
    // a + a* is real by construction; keep it as a complex so the caller can
    // check the imaginary part of the accumulated sum.
    Complex64::new(2.0 * a.re, 0.0) + omega * xi.norm_sqr()
}

/// `(E at the grid's cutoff, E with the cutoff halved)`.
pub fn phase_e_cutoff_sensitivity(frame: &DressedFrame, t: f64) -> Result<(f64, f64)> {
    Ok((
        phase_e(frame, t)?,
        phase_e_with_cutoff(frame, t, 0.5 * frame.grid.omega_max)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{Envelope, Trajectory};
    use crate::modes::build_waveguide_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn wg_grid() -> ModeGrid {
        // k = 1, 2 per direction (Δk = 1).
        build_waveguide_grid(4, 2.0, 2.0 * PI, 1.0).unwrap()
    }

    fn dipole_for_g(grid: &ModeGrid, g: f64, k: usize) -> f64 {
        let Geometry1D { length, area } = geom(grid);
        g / (grid.modes[k].omega / (2.0 * area * length)).sqrt()
    }

    struct Geometry1D {
        length: f64,
        area: f64,
    }

    fn geom(grid: &ModeGrid) -> Geometry1D {
        match grid.geometry {
            crate::modes::Geometry::Waveguide1D { length, area } => Geometry1D { length, area },
            _ => unreachable!(),
        }
    }

    #[test]
    fn adiabatic_xi_arithmetic() {
        let grid = wg_grid();
        let d = dipole_for_g(&grid, 0.01, 0);
        let p = CouplingProfile::waveguide(d, 1.0).unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        assert_relative_eq!(f.xi(0, 0.0).unwrap().re, 0.005, epsilon = 1e-16);
        assert_eq!(f.xi(0, 0.0).unwrap(), f.xi(0, 55.0).unwrap());
        let p0 = p.clone().with_dipole(0.0);
        let f0 = DressedFrame::adiabatic(&grid, &p0);
        assert_eq!(f0.xi(1, 3.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn exact_xi_closed_forms() {
        let grid = wg_grid();
        let p = CouplingProfile::waveguide(0.05, 1.0).unwrap();
        let f = DressedFrame::exact(&grid, &p);
        for t in [0.3, 7.0, 40.0] {
            let x = f.xi(1, t).unwrap();
            let a = xi_adiabatic(&f, 1, t).unwrap();
            assert!((x - a).norm() < 1e-12 * a.norm());
        }
        let p0 = p.clone().with_dipole(0.0);
        let n = grid.len();
        let f0 = DressedFrame::exact(&grid, &p0)
            .with_xi0(vec![Complex64::new(0.01, 0.0); n])
            .unwrap();
        let t = 12.5;
        let x = f0.xi(0, t).unwrap();
        let expected = Complex64::new(0.0, 2.0 * t).exp() * 0.01;
        assert!((x - expected).norm() < 1e-15);
    }

    #[test]
    fn periodic_frame_closes_the_orbit() {
        let grid = wg_grid();
        let nu = 1.3;
        let p = CouplingProfile::waveguide(0.05, 1.0)
            .unwrap()
            .with_envelope(Envelope::Sinusoidal { depth: 0.4, omega: nu });
        let f = DressedFrame::periodic(&grid, &p, 2.0 * PI / nu).unwrap();
        // Sinusoidal response: ξ = g0/Ω + (g0 ε / 2i)[e^{iνt}/(Ω−ν) − e^{−iνt}/(Ω+ν)].
        for k in 0..grid.len() {
            let g0 = f.g(k, 0.0).unwrap().re;
            let om = grid.modes[k].omega + 1.0;
            for t in [0.0, 0.7, 3.1, 40.0] {
                let e = Complex64::new(0.0, nu * t).exp();
                let expected = g0 / om + g0 * 0.4 / (2.0 * I) * (e / (om - nu) - e.conj() / (om + nu));
                assert!((f.xi(k, t).unwrap() - expected).norm() < 1e-11 * g0);
                assert!(counter_rotating_residual(&f, k, t).unwrap().norm() < 1e-11 * g0);
            }
        }
    }

    #[test]
    fn exact_series_matches_pointwise() {
        let grid = wg_grid();
        let p = CouplingProfile::waveguide(0.05, 1.0)
            .unwrap()
            .with_envelope(Envelope::Sinusoidal { depth: 0.3, omega: 0.2 });
        let f = DressedFrame::exact(&grid, &p);
        let times = [0.0, 1.0, 2.5, 10.0, 31.0];
        let x0 = xi_adiabatic(&f, 2, 0.0).unwrap();
        let series = xi_exact_series(&f, 2, &times, x0).unwrap();
        for (t, s) in times.iter().zip(&series) {
            assert!((f.xi(2, *t).unwrap() - s).norm() < 1e-11 * s.norm());
        }
    }

    #[test]
    fn residuals() {
        let grid = wg_grid();
        let p = CouplingProfile::waveguide(0.05, 1.0).unwrap();
        let fa = DressedFrame::adiabatic(&grid, &p);
        assert_eq!(
            counter_rotating_residual(&fa, 0, 3.0).unwrap(),
            Complex64::new(0.0, 0.0)
        );

        let wm = 0.01;
        let pm = p.clone().with_envelope(Envelope::Sinusoidal { depth: 0.1, omega: wm });
        let fa = DressedFrame::adiabatic(&grid, &pm);
        let fe = DressedFrame::exact(&grid, &pm);
        for k in 0..grid.len() {
            let big = grid.modes[k].omega + 1.0;
            for t in [0.0, 20.0, 77.0] {
                let g = fa.g(k, t).unwrap().norm();
                let r = counter_rotating_residual(&fa, k, t).unwrap().norm();
                // |ξ̇| = |ġ|/Ω ≤ 0.1 g0 ω_m / Ω
                assert!(r / g <= 0.1 * wm / big * 1.2 / 0.9);
                let re = counter_rotating_residual(&fe, k, t).unwrap().norm();
                assert!(re < 1e-9 * g);
            }
        }
    }

    #[test]
    fn eta_is_twice_omega_e_xi() {
        let grid = crate::modes::build_freespace_quadrature(3, 3, 4, 0.5, 1.0).unwrap();
        let p = CouplingProfile::oscillating_3d(
            0.2,
            [0.1, 0.2, 1.0],
            1.3,
            Trajectory {
                r_m: 0.5,
                omega_m: 0.1,
                r_hat: [1.0, 0.0, 0.0],
            },
        )
        .unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        for k in 0..grid.len() {
            for t in [0.0, 4.0, 9.0] {
                let a = f.eta(k, t).unwrap();
                let b = crate::coupling::eta_of_t(&p, &grid.geometry, &grid.modes[k], t).unwrap();
                assert!((a - f.xi(k, t).unwrap() * 2.6).norm() <= 1e-14 * a.norm());
                assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn lambda_arithmetic_and_rank() {
        let eta = vec![Complex64::new(0.02, 0.0); 2];
        let l = lambda_from_eta(&eta, 1.0);
        assert_relative_eq!(l[(0, 1)].re, 1e-4, epsilon = 1e-18);
        let grid = crate::modes::build_freespace_quadrature(3, 3, 4, 0.5, 1.0).unwrap();
        let p = CouplingProfile::static_atom(0.3, [0.0, 1.0, 1.0], 1.0).unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        let pm = lambda_matrix(&f, 0.0).unwrap();
        assert_eq!(pm.lambda, pm.lambda.transpose());
        let s = pm.singular_values();
        assert!(s[1] < 1e-12 * s[0]);
        let bad = DressedFrame::adiabatic(&grid, &p).with_omega_e_prime(OmegaPrime::Fixed(0.0));
        assert!(matches!(lambda_matrix(&bad, 0.0), Err(Error::SingularConfig(_))));
    }

    #[test]
    fn ground_state_pair_table() {
        let grid = build_waveguide_grid(2, 1.0, 2.0 * PI, 1.0).unwrap();
        // both modes at ω = 1; choose d so that η = 2ω_e g/(ω+ω_e) = g = 0.02
        let d = dipole_for_g(&grid, 0.02, 0);
        let p = CouplingProfile::waveguide(d, 1.0).unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        let table = ground_state_pairs(&f).unwrap();
        assert_eq!(table.entries.len(), 3);
        for e in &table.entries {
            assert_relative_eq!(e.coefficient.re, 5e-5, max_relative = 1e-12);
        }
        let p0 = p.with_dipole(0.0);
        let f0 = DressedFrame::adiabatic(&grid, &p0);
        assert_eq!(ground_state_pairs(&f0).unwrap().two_photon_weight(), 0.0);
    }

    #[test]
    fn static_phase_closed_form() {
        let grid = wg_grid();
        let p = CouplingProfile::waveguide(0.3, 1.0).unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        let e = phase_e(&f, 2.0).unwrap();
        let expected: f64 = (0..grid.len())
            .map(|k| {
                let g = f.g(k, 0.0).unwrap().re;
                let w = grid.modes[k].omega;
                -2.0 * g * g / (w + 1.0) + w * g * g / ((w + 1.0) * (w + 1.0))
            })
            .sum();
        assert!(e < 0.0);
        assert_relative_eq!(e, expected, max_relative = 1e-14);
        let p0 = p.with_dipole(0.0);
        assert_eq!(phase_e(&DressedFrame::adiabatic(&grid, &p0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn smallness_reported() {
        let grid = wg_grid();
        let p = CouplingProfile::waveguide(5.0, 1.0).unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        assert!(f.smallness(0.0).unwrap() > SMALLNESS_LIMIT);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let grid = wg_grid();
        let p = CouplingProfile::waveguide(0.3, 1.0).unwrap();
        let f = DressedFrame::adiabatic(&grid, &p);
        let pm = lambda_matrix(&f, 0.0).unwrap();
        let mut buf = Vec::new();
        pm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 16);
        assert!(text.starts_with("k_index,kp_index,re,im"));
        let back: PairMatrix = serde_json::from_str(&pm.to_json().unwrap()).unwrap();
        assert_eq!(back, pm);
    }
}
