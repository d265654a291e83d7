//! Atom–field couplings `g_k(t)` and the co-rotating couplings `η_k(t)`.
//!
//! Four scenarios are modelled:
//! - a static atom (either geometry),
//! - a static atom in a waveguide,
//! - an atom on the prescribed trajectory `r_A(t) = r_m cos(ω_m t) r̂_m` in free
//!   space, including the velocity-dependent (Röntgen) correction,
//! - the 1D analogue of the oscillating atom, where only the `e^{i k x_A(t)}`
//!   phase enters.
//!
//! An optional [`Envelope`] multiplies `g_k(t)` to model slow modulation of the
//! coupling strength itself (internal-state shaking, ramps).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{Geometry, Mode, ModeGrid};
use crate::vec3::{dot, normalized, Vec3};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Prescribed center-of-mass oscillation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Oscillation amplitude `r_m`.
    pub r_m: f64,
    /// Drive frequency `ω_m`.
    pub omega_m: f64,
    /// Oscillation axis (3D only; ignored in a waveguide).
    #[serde(default = "default_axis")]
    pub r_hat: Vec3,
}

fn default_axis() -> Vec3 {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CouplingKind {
    Static,
    OscillatingPosition3D { trajectory: Trajectory },
    Waveguide1D,
    OscillatingWaveguide1D { trajectory: Trajectory },
}

/// Dimensionless modulation `f(t)` multiplying every `g_k(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind")]
pub enum Envelope {
    #[default]
    Constant,
    /// `1 + depth · sin(omega t)`.
    Sinusoidal { depth: f64, omega: f64 },
    /// `exp(-(t - center)² / (2 width²))`.
    GaussianRamp { center: f64, width: f64 },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Sinusoidal { depth, omega } => 1.0 + depth * (omega * t).sin(),
            Envelope::GaussianRamp { center, width } => {
                let x = (t - center) / width;
                (-0.5 * x * x).exp()
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 0.0,
            Envelope::Sinusoidal { depth, omega } => depth * omega * (omega * t).cos(),
            Envelope::GaussianRamp { center, width } => {
                let x = (t - center) / width;
                -x / width * (-0.5 * x * x).exp()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Envelope::Constant) || matches!(self, Envelope::Sinusoidal { depth, .. } if *depth == 0.0)
    }
}

/// Coupling model. `epsilon0` absorbs the SI constants (ħ = 1), so
/// `χ_k = d √(ω_k / (2 ε₀ V))` in free space and `d √(ω_k / (2 ε₀ A L))` in a
/// waveguide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    pub kind: CouplingKind,
    /// Dipole magnitude `d >= 0`.
    pub dipole: f64,
    pub dipole_direction: Vec3,
    /// Atomic transition frequency `ω_e`.
    pub omega_e: f64,
    #[serde(default = "one")]
    pub epsilon0: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub envelope: Envelope,
    /// Evaluate `e^{i k·r_A}` exactly in [`eval_g`] instead of to first order
    /// in `r_m`.
    #[serde(default)]
    pub exact_phase: bool,
    #[serde(default = "yes")]
    pub include_roentgen: bool,
    /// Largest accepted `k_m r_m`.
    #[serde(default = "default_guard")]
    pub long_wavelength_guard: f64,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_guard() -> f64 {
    0.1
}

/// Static and sideband couplings of one mode, all real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaComponents {
    pub eta0: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
}

impl CouplingProfile {
    fn base(kind: CouplingKind, dipole: f64, dipole_direction: Vec3, omega_e: f64) -> Self {
        CouplingProfile {
            kind,
            dipole,
            dipole_direction,
            omega_e,
            epsilon0: 1.0,
            c: 1.0,
            envelope: Envelope::Constant,
            exact_phase: false,
            include_roentgen: true,
            long_wavelength_guard: default_guard(),
        }
    }

    pub fn static_atom(dipole: f64, dipole_direction: Vec3, omega_e: f64) -> Result<Self> {
        Self::base(CouplingKind::Static, dipole, dipole_direction, omega_e).validated()
    }

    pub fn waveguide(dipole: f64, omega_e: f64) -> Result<Self> {
        Self::base(CouplingKind::Waveguide1D, dipole, [1.0, 0.0, 0.0], omega_e).validated()
    }

    pub fn oscillating_3d(dipole: f64, dipole_direction: Vec3, omega_e: f64, trajectory: Trajectory) -> Result<Self> {
        Self::base(
            CouplingKind::OscillatingPosition3D { trajectory },
            dipole,
            dipole_direction,
            omega_e,
        )
        .validated()
    }

    pub fn oscillating_waveguide(dipole: f64, omega_e: f64, trajectory: Trajectory) -> Result<Self> {
        Self::base(
            CouplingKind::OscillatingWaveguide1D { trajectory },
            dipole,
            [1.0, 0.0, 0.0],
            omega_e,
        )
        .validated()
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn with_exact_phase(mut self, exact: bool) -> Self {
        self.exact_phase = exact;
        self
    }

    /// True when `g_k(t)` does not depend on time.
    pub fn is_time_independent(&self) -> bool {
        matches!(self.kind, CouplingKind::Static | CouplingKind::Waveguide1D) && self.envelope.is_constant()
    }

    pub fn with_roentgen(mut self, include: bool) -> Self {
        self.include_roentgen = include;
        self
    }

    pub fn with_dipole(mut self, dipole: f64) -> Self {
        self.dipole = dipole;
        self
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        self.c = c;
        self.validated()
    }

    pub fn trajectory(&self) -> Option<&Trajectory> {
        match &self.kind {
            CouplingKind::OscillatingPosition3D { trajectory }
            | CouplingKind::OscillatingWaveguide1D { trajectory } => Some(trajectory),
            _ => None,
        }
    }

    /// `k_m r_m` with `k_m = ω_m / c`; zero for non-oscillating profiles.
    pub fn km_rm(&self) -> f64 {
        self.trajectory().map(|tr| tr.omega_m / self.c * tr.r_m).unwrap_or(0.0)
    }

    /// Checks the dipole, the long-wavelength guard and the non-relativistic
    /// guard, normalizing the direction vectors.
    pub fn validated(mut self) -> Result<Self> {
        if !(self.dipole >= 0.0 && self.dipole.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dipole magnitude must be finite and >= 0, got {}",
                self.dipole
            )));
        }
        for (name, v) in [("omega_e", self.omega_e), ("epsilon0", self.epsilon0), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        self.dipole_direction = normalized(&self.dipole_direction)
            .ok_or_else(|| Error::InvalidConfig("dipole direction must be a non-zero vector".into()))?;
        let c = self.c;
        let guard = self.long_wavelength_guard;
        if let CouplingKind::OscillatingPosition3D { trajectory }
        | CouplingKind::OscillatingWaveguide1D { trajectory } = &mut self.kind
        {
            if !(trajectory.r_m >= 0.0 && trajectory.omega_m > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "trajectory needs r_m >= 0 and omega_m > 0, got r_m = {}, omega_m = {}",
                    trajectory.r_m, trajectory.omega_m
                )));
            }
            trajectory.r_hat = normalized(&trajectory.r_hat)
                .ok_or_else(|| Error::InvalidConfig("trajectory axis must be a non-zero vector".into()))?;
            let km_rm = trajectory.omega_m / c * trajectory.r_m;
            if km_rm > guard {
                return Err(Error::InvalidConfig(format!(
                    "long-wavelength condition violated: k_m r_m = {km_rm} > {guard}"
                )));
            }
            let beta_max = trajectory.r_m * trajectory.omega_m / c;
            if beta_max >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "non-relativistic condition violated: beta_max = {beta_max}"
                )));
            }
        }
        if let Envelope::GaussianRamp { width, .. } = self.envelope {
            if !(width > 0.0) {
                return Err(Error::InvalidConfig("ramp width must be positive".into()));
            }
        }
        Ok(self)
    }

    fn is_1d_kind(&self) -> Option<bool> {
        match self.kind {
            CouplingKind::Static => None,
            CouplingKind::Waveguide1D | CouplingKind::OscillatingWaveguide1D { .. } => Some(true),
            CouplingKind::OscillatingPosition3D { .. } => Some(false),
        }
    }

    fn check_geometry(&self, geometry: &Geometry) -> Result<()> {
        let is_1d = matches!(geometry, Geometry::Waveguide1D { .. });
        match self.is_1d_kind() {
            Some(want_1d) if want_1d != is_1d => Err(Error::GeometryMismatch(format!(
                "{:?} profile used with {} modes",
                self.kind,
                if is_1d { "waveguide" } else { "free-space" }
            ))),
            _ => Ok(()),
        }
    }

    /// Static coupling magnitude: `χ_k (d̂·ε̂)` in free space, the waveguide
    /// prefactor in 1D.
    fn static_g(&self, geometry: &Geometry, mode: &Mode) -> f64 {
        match *geometry {
            Geometry::Waveguide1D { length, area } => {
                self.dipole * (mode.omega / (2.0 * self.epsilon0 * area * length)).sqrt()
            }
            Geometry::FreeSpace3D { volume } => {
                let eps = mode.polarization.unwrap_or([0.0; 3]);
                chi(self, volume, mode.omega) * dot(&self.dipole_direction, &eps)
            }
        }
    }

    /// `2 ω_e / (ω_e + ω_k)`, i.e. `2 / (1 + ω_k/ω_e)`.
    fn dressing_factor(&self, omega: f64) -> f64 {
        2.0 * self.omega_e / (self.omega_e + omega)
    }
}

fn chi(profile: &CouplingProfile, volume: f64, omega: f64) -> f64 {
    profile.dipole * (omega / (2.0 * profile.epsilon0 * volume)).sqrt()
}

/// Röntgen bracket `ε̂ (d̂·k̂) − k̂ (d̂·ε̂)`.
fn roentgen_vector(d_hat: &Vec3, k_hat: &Vec3, eps: &Vec3) -> Vec3 {
    let dk = dot(d_hat, k_hat);
    let de = dot(d_hat, eps);
    [
        eps[0] * dk - k_hat[0] * de,
        eps[1] * dk - k_hat[1] * de,
        eps[2] * dk - k_hat[2] * de,
    ]
}

/// Envelope-free coupling and its time derivative.
fn bare_g_and_derivative(
    profile: &CouplingProfile,
    geometry: &Geometry,
    mode: &Mode,
    t: f64,
) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    match profile.kind {
        CouplingKind::Static | CouplingKind::Waveguide1D => {
            (Complex64::new(profile.static_g(geometry, mode), 0.0), zero)
        }
        CouplingKind::OscillatingWaveguide1D { trajectory } => {
            let g0 = profile.static_g(geometry, mode);
            let k = mode.wavevector[0];
            let (s, c) = (trajectory.omega_m * t).sin_cos();
            let x = trajectory.r_m * c;
            let xdot = -trajectory.r_m * trajectory.omega_m * s;
            if profile.exact_phase {
                let phase = Complex64::new(0.0, k * x).exp();
                (g0 * phase, g0 * phase * I * k * xdot)
            } else {
                (g0 * (1.0 + I * k * x), g0 * I * k * xdot)
            }
        }
        CouplingKind::OscillatingPosition3D { trajectory } => {
            let Geometry::FreeSpace3D { volume } = *geometry else {
                unreachable!("geometry checked by caller");
            };
            let chi_k = chi(profile, volume, mode.omega);
            let eps = mode.polarization.unwrap_or([0.0; 3]);
            let k_hat = mode.direction();
            let d_hat = &profile.dipole_direction;
            let de = dot(d_hat, &eps);
            let kr = mode.k() * dot(&k_hat, &trajectory.r_hat);
            let rv = if profile.include_roentgen {
                dot(&trajectory.r_hat, &roentgen_vector(d_hat, &k_hat, &eps))
            } else {
                0.0
            };
            let (s, c) = (trajectory.omega_m * t).sin_cos();
            let wm = trajectory.omega_m;
            // r_A·r̂ = r_m cos, β·r̂ = −(r_m ω_m / c) sin
            let pos = trajectory.r_m * c;
            let vel = -trajectory.r_m * wm * s;
            let beta = vel / profile.c;
            let beta_dot = -trajectory.r_m * wm * wm * c / profile.c;
            if profile.exact_phase {
                let phase = Complex64::new(0.0, kr * pos).exp();
                let bracket = de + beta * rv;
                let g = chi_k * phase * bracket;
                let dg = chi_k * phase * (I * kr * vel * bracket + beta_dot * rv);
                (g, dg)
            } else {
                let g = chi_k * (de * (1.0 + I * kr * pos) + beta * rv);
                let dg = chi_k * (de * I * kr * vel + beta_dot * rv);
                (g, dg)
            }
        }
    }
}

/// `g_k(t)` for one mode.
///
/// For the oscillating profiles the default evaluation is first order in
/// `r_m`, the same order kept by [`eta_components`]; set `exact_phase` to keep
/// the full exponential instead.
pub fn eval_g(profile: &CouplingProfile, geometry: &Geometry, mode: &Mode, t: f64) -> Result<Complex64> {
    profile.check_geometry(geometry)?;
    let (g, _) = bare_g_and_derivative(profile, geometry, mode, t);
    Ok(g * profile.envelope.value(t))
}

/// `(g_k(t), dg_k/dt)`, analytic for every kind and envelope.
pub fn eval_g_with_derivative(
    profile: &CouplingProfile,
    geometry: &Geometry,
    mode: &Mode,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    profile.check_geometry(geometry)?;
    let (g, dg) = bare_g_and_derivative(profile, geometry, mode, t);
    let f = profile.envelope.value(t);
    let df = profile.envelope.derivative(t);
    Ok((g * f, dg * f + g * df))
}

/// `η⁰`, `η⁺`, `η⁻` of a free-space mode for the oscillating-atom profile.
pub fn eta_components_3d(profile: &CouplingProfile, geometry: &Geometry, mode: &Mode) -> Result<EtaComponents> {
    let CouplingKind::OscillatingPosition3D { trajectory } = profile.kind else {
        return Err(Error::InvalidConfig(format!(
            "eta components need an OscillatingPosition3D profile, got {:?}",
            profile.kind
        )));
    };
    let Geometry::FreeSpace3D { volume } = *geometry else {
        return Err(Error::GeometryMismatch(
            "free-space profile with waveguide modes".into(),
        ));
    };
    let eps = mode.polarization.unwrap_or([0.0; 3]);
    let k_hat = mode.direction();
    let d_hat = &profile.dipole_direction;
    let pref = chi(profile, volume, mode.omega) / (1.0 + mode.omega / profile.omega_e);
    let de = dot(d_hat, &eps);
    let k_m = trajectory.omega_m / profile.c;
    let doppler = mode.k() / k_m * dot(&k_hat, &trajectory.r_hat) * de;
    let rv = if profile.include_roentgen {
        dot(&trajectory.r_hat, &roentgen_vector(d_hat, &k_hat, &eps))
    } else {
        0.0
    };
    Ok(EtaComponents {
        eta0: pref * 2.0 * de,
        eta_plus: pref * (doppler + rv),
        eta_minus: pref * (doppler - rv),
    })
}

/// Components for either oscillating profile. In a waveguide the sidebands
/// are `η± = η⁰ k / (2 k_m)` with signed `k`.
pub fn eta_components(profile: &CouplingProfile, geometry: &Geometry, mode: &Mode) -> Result<EtaComponents> {
    match profile.kind {
        CouplingKind::OscillatingPosition3D { .. } => eta_components_3d(profile, geometry, mode),
        CouplingKind::OscillatingWaveguide1D { trajectory } => {
            profile.check_geometry(geometry)?;
            let eta0 = profile.dressing_factor(mode.omega) * profile.static_g(geometry, mode);
            let k_m = trajectory.omega_m / profile.c;
            let side = eta0 * mode.wavevector[0] / (2.0 * k_m);
            Ok(EtaComponents {
                eta0,
                eta_plus: side,
                eta_minus: side,
            })
        }
        _ => {
            profile.check_geometry(geometry)?;
            let eta0 = profile.dressing_factor(mode.omega) * profile.static_g(geometry, mode);
            Ok(EtaComponents {
                eta0,
                eta_plus: 0.0,
                eta_minus: 0.0,
            })
        }
    }
}

/// Waveguide co-rotating coupling `[2ω_e/(ω_e+ω_k)] √(ω_k/(2 A L)) d` (ε₀ = ħ = 1).
pub fn eta_waveguide(mode: &Mode, dipole: f64, area: f64, length: f64, omega_e: f64) -> f64 {
    2.0 * omega_e / (omega_e + mode.omega) * (mode.omega / (2.0 * area * length)).sqrt() * dipole
}

/// `η_k(t)`. For the oscillating profiles this is the sideband expansion
/// `η⁰ + i k_m r_m (e^{iω_m t} η⁺ + e^{−iω_m t} η⁻)` times the envelope;
/// otherwise `2ω_e g_k(t)/(ω_k + ω_e)`.
pub fn eta_of_t(profile: &CouplingProfile, geometry: &Geometry, mode: &Mode, t: f64) -> Result<Complex64> {
    match profile.kind {
        CouplingKind::OscillatingPosition3D { trajectory } | CouplingKind::OscillatingWaveguide1D { trajectory } => {
            let comp = eta_components(profile, geometry, mode)?;
            let wt = trajectory.omega_m * t;
            let side = Complex64::new(0.0, wt).exp() * comp.eta_plus + Complex64::new(0.0, -wt).exp() * comp.eta_minus;
            Ok((comp.eta0 + I * profile.km_rm() * side) * profile.envelope.value(t))
        }
        _ => {
            let g = eval_g(profile, geometry, mode, t)?;
            Ok(g * profile.dressing_factor(mode.omega))
        }
    }
}

/// Spontaneous decay rate `γ` of the static atom on this grid's geometry.
///
/// Waveguide: `γ = 2π Σ_dir |η(ω_e)|² ρ(ω_e) = ω_e d² / (ε₀ A c)`; the atomic
/// frequency must lie inside the grid band. Free space: the golden-rule
/// integral over the grid's angular rule, `d² ω_e³ / (3π ε₀ c³)` for an exact
/// rule.
pub fn spontaneous_decay_rate(profile: &CouplingProfile, grid: &ModeGrid) -> Result<f64> {
    let we = profile.omega_e;
    let c = grid.c;
    match grid.geometry {
        Geometry::Waveguide1D { length, area } => {
            if we < grid.omega_min || we > grid.omega_max {
                return Err(Error::Band(format!(
                    "atomic frequency {we} outside grid band [{}, {}]",
                    grid.omega_min, grid.omega_max
                )));
            }
            let eta = profile.dipole * (we / (2.0 * profile.epsilon0 * area * length)).sqrt();
            let rho = length / (2.0 * PI * c);
            Ok(2.0 * PI * 2.0 * eta * eta * rho)
        }
        Geometry::FreeSpace3D { volume } => {
            if grid.angular.is_empty() {
                return Err(Error::InvalidConfig("free-space grid has no angular rule".into()));
            }
            let chi_e = chi(profile, volume, we);
            let angular: f64 = grid
                .angular
                .iter()
                .map(|n| {
                    n.weight
                        * n.polarizations
                            .iter()
                            .map(|e| dot(&profile.dipole_direction, e).powi(2))
                            .sum::<f64>()
                })
                .sum();
            let k_density = volume / (8.0 * PI * PI * PI);
            Ok(2.0 * PI * k_density * we * we / (c * c * c) * chi_e * chi_e * angular)
        }
    }
}

/// Rescale the dipole so that [`spontaneous_decay_rate`] equals `gamma`.
pub fn with_target_gamma(profile: CouplingProfile, grid: &ModeGrid, gamma: f64) -> Result<CouplingProfile> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidConfig(format!("target gamma must be >= 0, got {gamma}")));
    }
    let unit = profile.clone().with_dipole(1.0);
    let gamma_unit = spontaneous_decay_rate(&unit, grid)?;
    Ok(unit.with_dipole((gamma / gamma_unit).sqrt()))
}
