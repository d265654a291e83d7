//! Scenario runner: a JSON config selects one computation, which produces a
//! set of CSV/JSON artifacts plus a run manifest.
//!
//! Every artifact is rendered in memory first; the output directory is only
//! touched once the whole scenario has succeeded.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coupling::{with_target_gamma, CouplingProfile, Envelope, Trajectory};
use crate::dressing::{counter_rotating_residual, ground_state_pairs, phase_e, DressedFrame};
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, transformed_residual, PropagateOptions, ResidualOptions};
use crate::modes::{
    build_freespace_quadrature_with, build_waveguide_band, build_waveguide_grid_with, GridOptions, ModeGrid,
};
use crate::radiation::{
    extract_rate_constant, log_points, oracle_compare_pair_production, pair_amplitude_with_tol, rate_sweep, xi_max,
    RateOptions,
};
use crate::scattering::{
    excited_amplitude_scattering, far_packet_check, lorentzian_wavepacket, oracle_decay, three_photon_coefficients,
    ScatteringSummary, PHASE_CONVENTION,
};
use crate::vec3::Vec3;

/// JSON schema of [`ScenarioConfig`], printed by `vacuum-shake schema`.
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    DressingDump,
    RateSweep1D,
    RateSweep3D,
    Scattering3Photon,
    OracleCompare,
    AppendixAVerify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryChoice {
    Waveguide,
    FreeSpace,
}

/// Mode-grid parameters. Unset fields take scenario-specific defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub geometry: Option<GeometryChoice>,
    /// Waveguide: number of lattice modes (both directions) from `ω = Δω` up.
    pub n_modes: Option<usize>,
    /// Waveguide: `[lo, hi]` frequency window instead of `n_modes`.
    pub band: Option<[f64; 2]>,
    /// Waveguide lattice spacing `Δω = 2πc/L`.
    pub spacing: Option<f64>,
    pub area: Option<f64>,
    pub omega_max: Option<f64>,
    pub n_radial: Option<usize>,
    pub n_polar: Option<usize>,
    pub n_azimuthal: Option<usize>,
    pub volume: Option<f64>,
    pub c: Option<f64>,
    pub omega_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub omega_m: f64,
    /// Oscillation amplitude; exactly one of `r_m` and `km_rm` is given.
    pub r_m: Option<f64>,
    pub km_rm: Option<f64>,
    #[serde(default = "z_axis")]
    pub r_hat: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    #[serde(default = "one")]
    pub omega_e: f64,
    pub dipole: Option<f64>,
    /// Waveguide only: set the dipole from the decay rate instead.
    pub gamma: Option<f64>,
    #[serde(default = "z_axis")]
    pub dipole_direction: Vec3,
    pub drive: Option<DriveConfig>,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "yes")]
    pub include_roentgen: bool,
}

impl Default for AtomConfig {
    fn default() -> Self {
        AtomConfig {
            omega_e: 1.0,
            dipole: None,
            gamma: None,
            dipole_direction: z_axis(),
            drive: None,
            envelope: Envelope::Constant,
            include_roentgen: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_prop_tol")]
    pub propagation: f64,
    #[serde(default = "default_pair_tol")]
    pub pair_quadrature: f64,
    pub fd_step: Option<f64>,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            propagation: default_prop_tol(),
            pair_quadrature: default_pair_tol(),
            fd_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameChoice {
    Adiabatic,
    Exact,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DressingConfig {
    #[serde(default = "default_frame")]
    pub frame: FrameChoice,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Random `(mode, t)` samples of the counter-rotating residual.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Also tabulate the pair amplitude `C_kk'` at the last time.
    #[serde(default)]
    pub pair_amplitude: bool,
}

impl Default for DressingConfig {
    fn default() -> Self {
        DressingConfig {
            frame: default_frame(),
            times: default_times(),
            samples: default_samples(),
            t_max: default_t_max(),
            pair_amplitude: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_lo")]
    pub omega_lo: f64,
    #[serde(default = "default_sweep_hi")]
    pub omega_hi: f64,
    #[serde(default = "default_sweep_points")]
    pub points: usize,
    #[serde(default = "default_km_rm")]
    pub km_rm: f64,
    #[serde(default = "default_radial_nodes")]
    pub radial_nodes: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            omega_lo: default_sweep_lo(),
            omega_hi: default_sweep_hi(),
            points: default_sweep_points(),
            km_rm: default_km_rm(),
            radial_nodes: default_radial_nodes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_gamma")]
    pub gamma_prime: f64,
    /// Packet front; defaults to `−L/2`, as far from the atom as the
    /// periodic box allows.
    pub x0: Option<f64>,
    /// Upper edge of the band as a multiple of `ω_e`.
    #[serde(default = "default_band_top")]
    pub band_top: f64,
    /// Mass window in units of `max(γ, γ')`.
    #[serde(default = "default_window")]
    pub mass_window: f64,
    #[serde(default = "default_tau_samples")]
    pub tau_samples: usize,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig {
            gamma: default_gamma(),
            gamma_prime: default_gamma(),
            x0: None,
            band_top: default_band_top(),
            mass_window: default_window(),
            tau_samples: default_tau_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    PairProduction,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_oracle_kind")]
    pub kind: OracleKind,
    #[serde(default = "default_oracle_nmax")]
    pub n_max: usize,
    /// Final time; defaults to 200/ω_e for pairs and 3/γ for decay.
    pub t_final: Option<f64>,
    /// Pair production: rescale the dipole so that `max |ξ| = xi_max`.
    pub xi_max: Option<f64>,
    #[serde(default = "default_fit_samples")]
    pub fit_samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            kind: default_oracle_kind(),
            n_max: default_oracle_nmax(),
            t_final: None,
            xi_max: None,
            fit_samples: default_fit_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    #[serde(default = "default_xi_levels")]
    pub xi_max: Vec<f64>,
    #[serde(default = "default_residual_nmax")]
    pub n_max: usize,
    #[serde(default = "one")]
    pub t: f64,
    /// Largest photon number of the compared block.
    pub block_max: Option<usize>,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig {
            xi_max: default_xi_levels(),
            n_max: default_residual_nmax(),
            t: 1.0,
            block_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub atom: AtomConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub dressing: DressingConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub scattering: ScatteringConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub residual: ResidualConfig,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn z_axis() -> Vec3 {
    [0.0, 0.0, 1.0]
}
fn default_prop_tol() -> f64 {
    1e-10
}
fn default_pair_tol() -> f64 {
    1e-9
}
fn default_frame() -> FrameChoice {
    FrameChoice::Exact
}
fn default_times() -> Vec<f64> {
    vec![0.0]
}
fn default_samples() -> usize {
    100
}
fn default_t_max() -> f64 {
    100.0
}
fn default_sweep_lo() -> f64 {
    1e-3
}
fn default_sweep_hi() -> f64 {
    1e-2
}
fn default_sweep_points() -> usize {
    16
}
fn default_km_rm() -> f64 {
    0.05
}
fn default_radial_nodes() -> usize {
    48
}
fn default_gamma() -> f64 {
    1e-3
}
fn default_band_top() -> f64 {
    1.5
}
fn default_window() -> f64 {
    10.0
}
fn default_tau_samples() -> usize {
    200
}
fn default_oracle_kind() -> OracleKind {
    OracleKind::PairProduction
}
fn default_oracle_nmax() -> usize {
    2
}
fn default_fit_samples() -> usize {
    12
}
fn default_xi_levels() -> Vec<f64> {
    vec![0.04, 0.02]
}
fn default_residual_nmax() -> usize {
    4
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Schema(format!("{name} must be a positive number, got {v}")))
    }
}

fn positive_opt(name: &str, v: Option<f64>) -> Result<()> {
    v.map_or(Ok(()), |v| positive(name, v))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Range and consistency checks that the type system does not cover.
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        positive("tolerances.propagation", t.propagation)?;
        positive("tolerances.pair_quadrature", t.pair_quadrature)?;
        positive_opt("tolerances.fd_step", t.fd_step)?;

        let g = &self.grid;
        positive_opt("grid.spacing", g.spacing)?;
        positive_opt("grid.area", g.area)?;
        positive_opt("grid.omega_max", g.omega_max)?;
        positive_opt("grid.volume", g.volume)?;
        positive_opt("grid.c", g.c)?;
        if let Some(w) = g.omega_min {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Schema(format!("grid.omega_min must be >= 0, got {w}")));
            }
        }
        if let Some([lo, hi]) = g.band {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Schema(format!(
                    "grid.band must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        if g.band.is_some() && g.n_modes.is_some() {
            return Err(Error::Schema(
                "grid.band and grid.n_modes are mutually exclusive".into(),
            ));
        }

        let a = &self.atom;
        positive("atom.omega_e", a.omega_e)?;
        if let Some(d) = a.dipole {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Schema(format!("atom.dipole must be >= 0, got {d}")));
            }
        }
        positive_opt("atom.gamma", a.gamma)?;
        if a.dipole.is_some() && a.gamma.is_some() {
            return Err(Error::Schema("give atom.dipole or atom.gamma, not both".into()));
        }
        if let Some(dr) = &a.drive {
            positive("atom.drive.omega_m", dr.omega_m)?;
            match (dr.r_m, dr.km_rm) {
                (Some(r), None) if r >= 0.0 && r.is_finite() => {}
                (None, Some(k)) if k >= 0.0 && k.is_finite() => {}
                _ => {
                    return Err(Error::Schema(
                        "atom.drive needs exactly one non-negative r_m or km_rm".into(),
                    ))
                }
            }
        }

        match self.scenario {
            ScenarioKind::DressingDump => {
                let d = &self.dressing;
                if d.times.is_empty() || d.times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::Schema(
                        "dressing.times must be a non-empty list of finite times".into(),
                    ));
                }
                positive("dressing.t_max", d.t_max)?;
                if d.frame == FrameChoice::Periodic && a.drive.is_none() && a.envelope.is_constant() {
                    return Err(Error::Schema(
                        "a periodic frame needs atom.drive or a sinusoidal envelope".into(),
                    ));
                }
            }
            ScenarioKind::RateSweep1D | ScenarioKind::RateSweep3D => {
                let s = &self.sweep;
                positive("sweep.omega_lo", s.omega_lo)?;
                positive("sweep.omega_hi", s.omega_hi)?;
                if s.omega_hi <= s.omega_lo {
                    return Err(Error::Schema("sweep.omega_hi must exceed sweep.omega_lo".into()));
                }
                if s.points < 2 {
                    return Err(Error::Schema("sweep.points must be >= 2".into()));
                }
                positive("sweep.km_rm", s.km_rm)?;
                if s.radial_nodes == 0 {
                    return Err(Error::Schema("sweep.radial_nodes must be >= 1".into()));
                }
            }
            ScenarioKind::Scattering3Photon => {
                let s = &self.scattering;
                positive("scattering.gamma", s.gamma)?;
                positive("scattering.gamma_prime", s.gamma_prime)?;
                if let Some(x0) = s.x0 {
                    if !(x0 < 0.0 && x0.is_finite()) {
                        return Err(Error::Schema(format!("scattering.x0 must be negative, got {x0}")));
                    }
                }
                if !(s.band_top > 1.0 && s.band_top.is_finite()) {
                    return Err(Error::Schema("scattering.band_top must exceed 1".into()));
                }
                positive("scattering.mass_window", s.mass_window)?;
                if s.tau_samples < 2 {
                    return Err(Error::Schema("scattering.tau_samples must be >= 2".into()));
                }
            }
            ScenarioKind::OracleCompare => {
                let o = &self.oracle;
                positive_opt("oracle.t_final", o.t_final)?;
                positive_opt("oracle.xi_max", o.xi_max)?;
                if o.kind == OracleKind::PairProduction && o.n_max < 2 {
                    return Err(Error::Schema("pair-production oracle needs oracle.n_max >= 2".into()));
                }
                if o.kind == OracleKind::Decay && o.fit_samples < 2 {
                    return Err(Error::Schema("oracle.fit_samples must be >= 2".into()));
                }
            }
            ScenarioKind::AppendixAVerify => {
                let r = &self.residual;
                if r.xi_max.is_empty() {
                    return Err(Error::Schema("residual.xi_max must not be empty".into()));
                }
                for &x in &r.xi_max {
                    positive("residual.xi_max", x)?;
                }
                if r.n_max < 1 {
                    return Err(Error::Schema("residual.n_max must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// One rendered output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Artifact {
            name: name.to_string(),
            contents,
        }
    }

    fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        Ok(Artifact::new(name, serde_json::to_string_pretty(value)? + "\n"))
    }
}

/// Everything a scenario produced, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub scenario: ScenarioKind,
    pub artifacts: Vec<Artifact>,
    /// Headline numbers, also echoed in the manifest.
    pub summary: Value,
}

impl ScenarioOutput {
    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: ScenarioKind,
    pub config: ScenarioConfig,
    pub tolerances: ToleranceConfig,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
    pub summary: Value,
}

fn grid_options(cfg: &GridConfig) -> GridOptions {
    let d = GridOptions::default();
    GridOptions {
        c: cfg.c.unwrap_or(d.c),
        omega_min: cfg.omega_min.unwrap_or(d.omega_min),
    }
}

/// Waveguide grid from the config, with defaults `(n_modes, spacing)`.
fn waveguide_grid(cfg: &GridConfig, n_default: usize, spacing_default: f64) -> Result<ModeGrid> {
    let opts = grid_options(cfg);
    let spacing = cfg.spacing.unwrap_or(spacing_default);
    let length = 2.0 * PI * opts.c / spacing;
    let area = cfg.area.unwrap_or(1.0);
    match cfg.band {
        Some([lo, hi]) => build_waveguide_band(lo, hi, length, area, opts),
        None => {
            let n = cfg.n_modes.unwrap_or(n_default);
            let top = spacing * (n / 2) as f64;
            build_waveguide_grid_with(n, cfg.omega_max.unwrap_or(top), length, area, opts)
        }
    }
}

fn freespace_grid(cfg: &GridConfig, omega_max_default: f64) -> Result<ModeGrid> {
    build_freespace_quadrature_with(
        cfg.n_radial.unwrap_or(8),
        cfg.n_polar.unwrap_or(8),
        cfg.n_azimuthal.unwrap_or(8),
        cfg.omega_max.unwrap_or(omega_max_default),
        cfg.volume.unwrap_or(1.0),
        grid_options(cfg),
    )
}

fn trajectory(drive: &DriveConfig, c: f64) -> Trajectory {
    let r_m = drive
        .r_m
        .unwrap_or_else(|| drive.km_rm.unwrap_or(0.0) * c / drive.omega_m);
    Trajectory {
        r_m,
        omega_m: drive.omega_m,
        r_hat: drive.r_hat,
    }
}

/// Profile matching the grid geometry; the dipole defaults to `dipole_default`.
fn build_profile(atom: &AtomConfig, grid: &ModeGrid, dipole_default: f64) -> Result<CouplingProfile> {
    let d = atom.dipole.unwrap_or(dipole_default);
    let base = match (grid.is_waveguide(), &atom.drive) {
        (true, None) => CouplingProfile::waveguide(d, atom.omega_e)?,
        (true, Some(dr)) => CouplingProfile::oscillating_waveguide(d, atom.omega_e, trajectory(dr, grid.c))?,
        (false, None) => CouplingProfile::static_atom(d, atom.dipole_direction, atom.omega_e)?,
        (false, Some(dr)) => {
            CouplingProfile::oscillating_3d(d, atom.dipole_direction, atom.omega_e, trajectory(dr, grid.c))?
        }
    };
    let p = base
        .with_envelope(atom.envelope)
        .with_roentgen(atom.include_roentgen)
        .with_c(grid.c)?;
    match atom.gamma {
        Some(g) => with_target_gamma(p, grid, g),
        None => Ok(p),
    }
}

fn drive_period(profile: &CouplingProfile) -> Option<f64> {
    if let Some(tr) = profile.trajectory() {
        return Some(2.0 * PI / tr.omega_m);
    }
    match profile.envelope {
        Envelope::Sinusoidal { depth, omega } if depth != 0.0 => Some(2.0 * PI / omega),
        _ => None,
    }
}

fn make_frame<'a>(choice: FrameChoice, grid: &'a ModeGrid, profile: &'a CouplingProfile) -> Result<DressedFrame<'a>> {
    match choice {
        FrameChoice::Adiabatic => Ok(DressedFrame::adiabatic(grid, profile)),
        FrameChoice::Exact => Ok(DressedFrame::exact(grid, profile)),
        FrameChoice::Periodic => {
            let period = drive_period(profile)
                .ok_or_else(|| Error::InvalidConfig("periodic frame needs a periodic drive".into()))?;
            DressedFrame::periodic(grid, profile, period)
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs the scenario without touching the filesystem.
pub fn execute(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    info!("running {:?}", cfg.scenario);
    let (artifacts, summary) = match cfg.scenario {
        ScenarioKind::DressingDump => dressing_dump(cfg)?,
        ScenarioKind::RateSweep1D => sweep(cfg, false)?,
        ScenarioKind::RateSweep3D => sweep(cfg, true)?,
        ScenarioKind::Scattering3Photon => scattering(cfg)?,
        ScenarioKind::OracleCompare => match cfg.oracle.kind {
            OracleKind::PairProduction => oracle_pairs(cfg)?,
            OracleKind::Decay => oracle_decay_run(cfg)?,
        },
        ScenarioKind::AppendixAVerify => appendix_a(cfg)?,
    };
    Ok(ScenarioOutput {
        scenario: cfg.scenario,
        artifacts,
        summary,
    })
}

type Rendered = (Vec<Artifact>, Value);

fn dressing_dump(cfg: &ScenarioConfig) -> Result<Rendered> {
    let grid = match cfg.grid.geometry.unwrap_or(GeometryChoice::Waveguide) {
        GeometryChoice::Waveguide => waveguide_grid(&cfg.grid, 8, 0.3)?,
        GeometryChoice::FreeSpace => freespace_grid(&cfg.grid, 2.0)?,
    };
    let profile = build_profile(&cfg.atom, &grid, 0.1)?;
    let d = &cfg.dressing;
    let frame = make_frame(d.frame, &grid, &profile)?;

    let mut table = String::from("t,k_index,omega,g_re,g_im,xi_re,xi_im,eta_re,eta_im,residual_abs\n");
    let mut max_smallness = 0.0f64;
    let mut phases = Vec::new();
    for &t in &d.times {
        let xi = frame.xi_all(t)?;
        max_smallness = max_smallness.max(xi.iter().map(|x| x.norm_sqr()).sum());
        for (k, mode) in grid.modes.iter().enumerate() {
            let g = frame.g(k, t)?;
            let eta = frame.eta(k, t)?;
            let r = counter_rotating_residual(&frame, k, t)?;
            writeln!(
                table,
                "{},{k},{},{},{},{},{},{},{},{}",
                fmt(t),
                fmt(mode.omega),
                fmt(g.re),
                fmt(g.im),
                fmt(xi[k].re),
                fmt(xi[k].im),
                fmt(eta.re),
                fmt(eta.im),
                fmt(r.norm())
            )
            .expect("writing to a String");
        }
        phases.push(phase_e(&frame, t)?);
    }

    // Counter-rotating residual at seeded random (mode, t) samples.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = String::from("k_index,t,residual_abs,g_abs\n");
    let (mut worst, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..d.samples {
        let k = rng.random_range(0..grid.len());
        let t = rng.random_range(0.0..d.t_max);
        let r = counter_rotating_residual(&frame, k, t)?.norm();
        let g = frame.g(k, t)?.norm();
        worst = worst.max(r);
        if g > 0.0 {
            worst_rel = worst_rel.max(r / g);
        }
        writeln!(samples, "{k},{},{},{}", fmt(t), fmt(r), fmt(g)).expect("writing to a String");
    }

    let pairs = ground_state_pairs(&frame)?;
    let mut pair_csv = Vec::new();
    pairs.write_csv(&mut pair_csv)?;
    let mut artifacts = vec![
        Artifact::new("dressing.csv", table),
        Artifact::new("residual_samples.csv", samples),
        Artifact::new("ground_pairs.csv", String::from_utf8_lossy(&pair_csv).into_owned()),
    ];
    let mut summary = json!({
        "frame": d.frame,
        "n_modes": grid.len(),
        "max_smallness": max_smallness,
        "phase_e": phases,
        "max_residual": worst,
        "max_relative_residual": worst_rel,
        "two_photon_weight": pairs.two_photon_weight(),
    });
    if d.pair_amplitude {
        let t = *d.times.last().expect("validated non-empty");
        let amp = pair_amplitude_with_tol(&frame, t, cfg.tolerances.pair_quadrature)?;
        let mut buf = Vec::new();
        amp.write_csv(&mut buf)?;
        artifacts.push(Artifact::new(
            "pair_amplitude.csv",
            String::from_utf8_lossy(&buf).into_owned(),
        ));
        summary["max_free_part"] = json!(amp.max_free());
    }
    artifacts.push(Artifact::json("dressing.json", &summary)?);
    Ok((artifacts, summary))
}

fn sweep(cfg: &ScenarioConfig, three_d: bool) -> Result<Rendered> {
    let s = &cfg.sweep;
    let grid = if three_d {
        freespace_grid(&cfg.grid, 2.0 * s.omega_hi)?
    } else {
        let spacing = cfg.grid.spacing.unwrap_or(s.omega_lo / 10.0);
        let mut g = cfg.grid.clone();
        g.spacing = Some(spacing);
        if g.band.is_none() && g.n_modes.is_none() {
            g.band = Some([spacing, 2.0 * s.omega_hi]);
        }
        waveguide_grid(&g, 0, spacing)?
    };
    let mut atom = cfg.atom.clone();
    if atom.drive.is_some() {
        return Err(Error::InvalidConfig(
            "rate sweeps set the drive themselves; remove atom.drive".into(),
        ));
    }
    atom.drive = None;
    let profile = build_profile(&atom, &grid, 0.05)?;
    let omegas = log_points(s.omega_lo, s.omega_hi, s.points);
    let opts = RateOptions {
        radial_nodes: s.radial_nodes,
    };
    let mut result = rate_sweep(&grid, &profile, &omegas, s.km_rm, &opts)?;
    let fit = if three_d && s.omega_hi / profile.omega_e <= 1e-2 {
        let fit = extract_rate_constant(&result, profile.omega_e)?;
        result.constant_c = Some(fit.constant_c);
        for p in &mut result.points {
            p.constant_c = Some(fit.constant_c);
        }
        Some(fit)
    } else {
        None
    };
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    let summary = json!({
        "geometry": result.grid.geometry,
        "points": result.points.len(),
        "exponent": result.exponent,
        "r_squared": result.r_squared,
        "constant_c": result.constant_c,
        "constant_fit": fit,
    });
    Ok((
        vec![
            Artifact::new("rates.csv", String::from_utf8_lossy(&csv).into_owned()),
            Artifact::json("rates.json", &result)?,
        ],
        summary,
    ))
}

fn scattering(cfg: &ScenarioConfig) -> Result<Rendered> {
    let s = &cfg.scattering;
    let we = cfg.atom.omega_e;
    let spacing = cfg.grid.spacing.unwrap_or(0.25 * s.gamma.min(s.gamma_prime));
    let mut g = cfg.grid.clone();
    g.spacing = Some(spacing);
    if g.band.is_none() && g.n_modes.is_none() {
        g.band = Some([0.5 * spacing, s.band_top * we]);
    }
    let grid = waveguide_grid(&g, 0, spacing)?;
    let mut atom = cfg.atom.clone();
    if atom.dipole.is_none() {
        atom.gamma = Some(atom.gamma.unwrap_or(s.gamma));
    }
    let profile = build_profile(&atom, &grid, 0.0)?;
    let gamma = crate::scattering::gamma_from_coupling(&grid, &profile)?;
    let x0 = s.x0.unwrap_or(-PI * grid.c / spacing);
    let packet = lorentzian_wavepacket(&grid, we, s.gamma_prime, x0)?;
    let far = far_packet_check(&packet, &grid, we)?;
    let tensor = three_photon_coefficients(&grid, &profile, gamma, s.gamma_prime, packet.arrival_time(grid.c))?;
    let window = s.mass_window * gamma.max(s.gamma_prime);
    let p3 = tensor.probability();
    let summary_struct = ScatteringSummary {
        p3,
        gamma,
        gamma_prime: s.gamma_prime,
        mass_fraction: tensor.mass_fraction(window),
        mass_window: window,
        mean_energy: tensor.mean_energy(),
        n_modes: grid.len(),
        length: 2.0 * PI * grid.c / spacing,
        spacing: tensor.spacing,
        packet_norm: packet.norm_sqr(),
        far_packet: far,
        phase_convention: PHASE_CONVENTION.to_string(),
    };

    let mut excited = String::from("tau,re,im,abs\n");
    let tau_max = 10.0 / gamma.min(s.gamma_prime);
    for i in 0..s.tau_samples {
        let tau = tau_max * i as f64 / (s.tau_samples - 1) as f64;
        let a = excited_amplitude_scattering(gamma, s.gamma_prime, we, tau)?;
        writeln!(excited, "{},{},{},{}", fmt(tau), fmt(a.re), fmt(a.im), fmt(a.norm())).expect("writing to a String");
    }

    let dirs: Vec<Option<i8>> = grid.modes.iter().map(|m| m.direction_sign).collect();
    let mut shell = String::from("omega_l,abs_c\n");
    let profile_rows = tensor
        .on_shell_profile(&dirs, 2.0 * gamma, we - 2.0 * gamma)
        .unwrap_or_default();
    for (w, c) in &profile_rows {
        writeln!(shell, "{},{}", fmt(*w), fmt(*c)).expect("writing to a String");
    }

    // Slice through the resonant right-mover pair (j = k at ω_e/3 when on the lattice).
    let third = grid
        .modes
        .iter()
        .enumerate()
        .filter(|(_, m)| m.direction_sign == Some(1))
        .min_by(|a, b| (a.1.omega - we / 3.0).abs().total_cmp(&(b.1.omega - we / 3.0).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidConfig("no right-moving modes on the grid".into()))?;
    let mut slice = Vec::new();
    tensor.write_slice_csv(third, third, &mut slice)?;

    let summary = serde_json::to_value(&summary_struct)?;
    Ok((
        vec![
            Artifact::json("scattering.json", &summary_struct)?,
            Artifact::new("excited_amplitude.csv", excited),
            Artifact::new("on_shell.csv", shell),
            Artifact::new("tensor_slice.csv", String::from_utf8_lossy(&slice).into_owned()),
        ],
        summary,
    ))
}

/// Pair-production oracle defaults: four modes spaced by 0.07 with a
/// trajectory drive at `ω_m = 3Δω`, resonant with the pair `(Δω, 2Δω)`.
fn oracle_pairs(cfg: &ScenarioConfig) -> Result<Rendered> {
    let o = &cfg.oracle;
    let grid = waveguide_grid(&cfg.grid, 4, 0.07)?;
    let mut atom = cfg.atom.clone();
    let spacing = cfg.grid.spacing.unwrap_or(0.07);
    if atom.drive.is_none() && atom.envelope.is_constant() {
        atom.drive = Some(DriveConfig {
            omega_m: 3.0 * spacing,
            r_m: None,
            km_rm: Some(0.099),
            r_hat: z_axis(),
        });
    }
    let mut profile = build_profile(&atom, &grid, 1.0)?;
    let period =
        drive_period(&profile).ok_or_else(|| Error::InvalidConfig("pair oracle needs a periodic drive".into()))?;
    let target = o.xi_max.unwrap_or(0.03);
    if o.xi_max.is_some() || cfg.atom.dipole.is_none() {
        let frame = DressedFrame::periodic(&grid, &profile, period)?;
        let current = xi_max(&frame, period, 64)?;
        if current == 0.0 {
            return Err(Error::InvalidConfig("dipole is zero; cannot rescale to xi_max".into()));
        }
        profile = profile.clone().with_dipole(profile.dipole * target / current);
    }
    let frame = DressedFrame::periodic(&grid, &profile, period)?;
    let basis = enumerate_basis(grid.len(), o.n_max)?;
    let t_final = o.t_final.unwrap_or(200.0 / profile.omega_e);
    let opts = PropagateOptions::with_tol(cfg.tolerances.propagation).interaction();
    let report = oracle_compare_pair_production(&basis, &frame, t_final, &opts)?;
    let mut csv = String::from(
        "k_index,kp_index,resonant,perturbative_re,perturbative_im,oracle_re,oracle_im,abs_deviation,rel_deviation\n",
    );
    for e in &report.entries {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            e.k,
            e.kp,
            e.resonant,
            fmt(e.perturbative.re),
            fmt(e.perturbative.im),
            fmt(e.oracle.re),
            fmt(e.oracle.im),
            fmt(e.abs_deviation),
            fmt(e.rel_deviation)
        )
        .expect("writing to a String");
    }
    let summary = json!({
        "kind": "pair-production",
        "t_final": t_final,
        "xi_max": xi_max(&frame, period, 64)?,
        "dipole": profile.dipole,
        "dominant_rel_deviation": report.dominant_rel_deviation,
        "max_resonant_rel_deviation": report.max_resonant_rel_deviation,
        "norm_loss": report.norm_loss,
        "norm_drift": report.norm_drift,
    });
    Ok((
        vec![
            Artifact::new("oracle.csv", csv),
            Artifact::json("oracle.json", &report)?,
        ],
        summary,
    ))
}

/// Decay oracle defaults: 200 modes on `ω_e ± 0.02`, `γ = 1e-3 ω_e`.
fn oracle_decay_run(cfg: &ScenarioConfig) -> Result<Rendered> {
    let o = &cfg.oracle;
    if o.n_max != 1 && o.n_max != default_oracle_nmax() {
        return Err(Error::InvalidConfig(
            "the decay oracle works in the one-excitation space".into(),
        ));
    }
    let we = cfg.atom.omega_e;
    let mut g = cfg.grid.clone();
    let spacing = g.spacing.unwrap_or(4e-4 * we);
    g.spacing = Some(spacing);
    if g.band.is_none() && g.n_modes.is_none() {
        g.band = Some([0.98 * we + 1e-9 * we, 1.02 * we]);
    }
    let grid = waveguide_grid(&g, 0, spacing)?;
    let mut atom = cfg.atom.clone();
    if atom.dipole.is_none() {
        atom.gamma = Some(atom.gamma.unwrap_or(1e-3 * we));
    }
    let profile = build_profile(&atom, &grid, 0.0)?;
    let gamma = crate::scattering::gamma_from_coupling(&grid, &profile)?;
    let t_final = o.t_final.unwrap_or(3.0 / gamma);
    let opts = PropagateOptions::with_tol(cfg.tolerances.propagation).interaction();
    let report = oracle_decay(&grid, &profile, t_final, o.fit_samples, &opts)?;
    let mut csv = String::from("t,excited_abs,ww_abs\n");
    for (t, a) in report.times.iter().zip(&report.excited_abs) {
        writeln!(csv, "{},{},{}", fmt(*t), fmt(*a), fmt((-0.5 * gamma * t).exp())).expect("writing to a String");
    }
    let summary = json!({
        "kind": "decay",
        "n_modes": grid.len(),
        "gamma_expected": report.gamma_expected,
        "gamma_fit": report.gamma_fit,
        "rel_error": report.rel_error,
        "rms_mode_deviation": report.rms_mode_deviation,
        "norm_drift": report.norm_drift,
    });
    Ok((
        vec![Artifact::new("decay.csv", csv), Artifact::json("decay.json", &report)?],
        summary,
    ))
}

/// Residual of the second-order transformed Hamiltonian on a two-mode
/// waveguide, with the dipole scaled to each requested `max |ξ|`.
fn appendix_a(cfg: &ScenarioConfig) -> Result<Rendered> {
    let r = &cfg.residual;
    let grid = waveguide_grid(&cfg.grid, 2, 1.0)?;
    let basis = enumerate_basis(grid.len(), r.n_max)?;
    let mut atom = cfg.atom.clone();
    if atom.envelope.is_constant() && atom.drive.is_none() {
        atom.envelope = Envelope::Sinusoidal {
            depth: 0.3,
            omega: 0.05,
        };
    }
    atom.dipole = Some(1.0);
    atom.gamma = None;
    let unit = build_profile(&atom, &grid, 1.0)?;
    let unit_xi = DressedFrame::adiabatic(&grid, &unit)
        .xi_all(r.t)?
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    if unit_xi == 0.0 {
        return Err(Error::InvalidConfig("coupling vanishes at the residual time".into()));
    }
    let opts = ResidualOptions {
        fd_step: cfg.tolerances.fd_step,
        include_phase: true,
        block_max: r.block_max,
    };
    let mut csv = String::from("xi_max,residual,residual_plain,richardson_delta,block_max,block_dim\n");
    let mut rows = Vec::new();
    for &target in &r.xi_max {
        let profile = unit.clone().with_dipole(target / unit_xi);
        let frame = DressedFrame::adiabatic(&grid, &profile);
        let rep = transformed_residual(&basis, &frame, r.t, &opts)?;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt(target),
            fmt(rep.residual),
            fmt(rep.residual_plain),
            fmt(rep.richardson_delta),
            rep.block_max,
            rep.block_dim
        )
        .expect("writing to a String");
        rows.push(json!({ "xi_max": target, "report": rep }));
    }
    let ratios: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            w[0]["report"]["residual"].as_f64().unwrap_or(f64::NAN)
                / w[1]["report"]["residual"].as_f64().unwrap_or(f64::NAN)
        })
        .collect();
    let summary = json!({ "levels": rows, "ratios": ratios, "n_max": r.n_max, "t": r.t });
    Ok((
        vec![
            Artifact::new("residual.csv", csv),
            Artifact::json("residual.json", &summary)?,
        ],
        summary,
    ))
}

/// Writes artifacts and the manifest into `out_dir`. Files are staged under
/// temporary names and renamed only after every write succeeded.
pub fn write_outputs(
    cfg: &ScenarioConfig,
    output: &ScenarioOutput,
    out_dir: &Path,
    wall_time_s: f64,
) -> Result<Manifest> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: output.scenario,
        config: cfg.clone(),
        tolerances: cfg.tolerances,
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        wall_time_s,
        artifacts: output.artifacts.iter().map(|a| a.name.clone()).collect(),
        summary: output.summary.clone(),
    };
    let mut files: Vec<(String, String)> = output
        .artifacts
        .iter()
        .map(|a| (a.name.clone(), a.contents.clone()))
        .collect();
    files.push((
        MANIFEST_NAME.to_string(),
        serde_json::to_string_pretty(&manifest)? + "\n",
    ));

    fs::create_dir_all(out_dir)?;
    let mut staged = Vec::new();
    let result = (|| -> Result<()> {
        for (name, contents) in &files {
            let tmp = out_dir.join(format!(".{name}.partial"));
            staged.push(tmp.clone());
            fs::write(&tmp, contents)?;
        }
        for (name, _) in &files {
            fs::rename(out_dir.join(format!(".{name}.partial")), out_dir.join(name))?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in staged {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(manifest)
}

/// Loads, executes and writes a scenario. `out_override` wins over the
/// config's `output_dir`, which defaults to `./vacuum-shake-out`.
pub fn run_scenario(config_path: &Path, out_override: Option<&Path>) -> Result<Manifest> {
    let cfg = ScenarioConfig::load(config_path)?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("vacuum-shake-out"));
    let start = Instant::now();
    let output = execute(&cfg)?;
    write_outputs(&cfg, &output, &out_dir, start.elapsed().as_secs_f64())
}

/// Per-field relative tolerances for [`compare_baseline`]. Fields are looked
/// up by full path (`points[3].rate`), then by name (`rate`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareTolerances {
    #[serde(default = "default_compare_tol")]
    pub default: f64,
    #[serde(default)]
    pub fields: BTreeMap<String, f64>,
    /// Fields left out of the comparison (e.g. `wall_time_s`).
    #[serde(default)]
    pub ignore: Vec<String>,
}

fn default_compare_tol() -> f64 {
    1e-12
}

impl Default for CompareTolerances {
    fn default() -> Self {
        CompareTolerances {
            default: default_compare_tol(),
            fields: BTreeMap::new(),
            ignore: vec!["wall_time_s".into(), "threads".into()],
        }
    }
}

impl CompareTolerances {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Schema(e.to_string()))
    }

    fn for_field(&self, path: &str, name: &str) -> f64 {
        self.fields
            .get(path)
            .or_else(|| self.fields.get(name))
            .copied()
            .unwrap_or(self.default)
    }

    fn ignored(&self, path: &str, name: &str) -> bool {
        self.ignore.iter().any(|i| i == path || i == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDeviation {
    pub location: String,
    pub result: f64,
    pub baseline: f64,
    pub rel_deviation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub passed: bool,
    pub fields_compared: usize,
    pub max_deviation: f64,
    pub failures: Vec<FieldDeviation>,
}

fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_nan() || b.is_nan() {
        return f64::INFINITY;
    }
    let scale = b.abs();
    if scale == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / scale
    }
}

struct Collector<'a> {
    tol: &'a CompareTolerances,
    report: ComparisonReport,
}

impl Collector<'_> {
    fn number(&mut self, location: String, name: &str, a: f64, b: f64) {
        if self.tol.ignored(&location, name) {
            return;
        }
        let tolerance = self.tol.for_field(&location, name);
        let d = rel_dev(a, b);
        self.report.fields_compared += 1;
        self.report.max_deviation = self.report.max_deviation.max(d);
        if d > tolerance {
            self.report.failures.push(FieldDeviation {
                location,
                result: a,
                baseline: b,
                rel_deviation: d,
                tolerance,
            });
        }
    }
}

fn compare_json(c: &mut Collector, path: &str, name: &str, a: &Value, b: &Value) -> Result<()> {
    if c.tol.ignored(path, name) {
        return Ok(());
    }
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            c.number(
                path.to_string(),
                name,
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<&String> = x.keys().collect();
            let ky: Vec<&String> = y.keys().collect();
            if kx != ky {
                return Err(Error::Schema(format!("keys differ at '{path}': {kx:?} vs {ky:?}")));
            }
            for (k, v) in x {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                compare_json(c, &p, k, v, &y[k])?;
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(Error::Schema(format!(
                    "array length differs at '{path}': {} vs {}",
                    x.len(),
                    y.len()
                )));
            }
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                compare_json(c, &format!("{path}[{i}]"), name, u, v)?;
            }
        }
        (x, y) if std::mem::discriminant(x) == std::mem::discriminant(y) => {
            if x != y {
                c.report.failures.push(FieldDeviation {
                    location: format!("{path} ({x} vs {y})"),
                    result: f64::NAN,
                    baseline: f64::NAN,
                    rel_deviation: f64::INFINITY,
                    tolerance: 0.0,
                });
            }
        }
        _ => return Err(Error::Schema(format!("type differs at '{path}'"))),
    }
    Ok(())
}

fn compare_csv(c: &mut Collector, a: &str, b: &str) -> Result<()> {
    let mut la = a.lines();
    let mut lb = b.lines();
    let ha = la.next().unwrap_or_default();
    let hb = lb.next().unwrap_or_default();
    if ha != hb {
        return Err(Error::Schema(format!("CSV headers differ: '{ha}' vs '{hb}'")));
    }
    let header: Vec<&str> = ha.split(',').collect();
    let rows_a: Vec<&str> = la.filter(|l| !l.is_empty()).collect();
    let rows_b: Vec<&str> = lb.filter(|l| !l.is_empty()).collect();
    if rows_a.len() != rows_b.len() {
        return Err(Error::Schema(format!(
            "row count differs: {} vs {}",
            rows_a.len(),
            rows_b.len()
        )));
    }
    for (row, (ra, rb)) in rows_a.iter().zip(&rows_b).enumerate() {
        let fa: Vec<&str> = ra.split(',').collect();
        let fb: Vec<&str> = rb.split(',').collect();
        if fa.len() != header.len() || fb.len() != header.len() {
            return Err(Error::Schema(format!("row {} has the wrong number of fields", row + 1)));
        }
        for ((col, x), y) in header.iter().zip(&fa).zip(&fb) {
            let location = format!("row {}, column {col}", row + 1);
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => c.number(location, col, u, v),
                _ if x == y => {}
                _ => c.report.failures.push(FieldDeviation {
                    location: format!("{location} ({x} vs {y})"),
                    result: f64::NAN,
                    baseline: f64::NAN,
                    rel_deviation: f64::INFINITY,
                    tolerance: 0.0,
                }),
            }
        }
    }
    Ok(())
}

/// Field-wise relative comparison of two result files of the same kind
/// (CSV by extension, JSON otherwise).
pub fn compare_baseline(result: &Path, baseline: &Path, tol: &CompareTolerances) -> Result<ComparisonReport> {
    let a = fs::read_to_string(result)?;
    let b = fs::read_to_string(baseline)?;
    let is_csv = |p: &Path| p.extension().is_some_and(|e| e == "csv");
    if is_csv(result) != is_csv(baseline) {
        return Err(Error::Schema("result and baseline have different formats".into()));
    }
    compare_text(&a, &b, is_csv(result), tol)
}

pub fn compare_text(result: &str, baseline: &str, csv: bool, tol: &CompareTolerances) -> Result<ComparisonReport> {
    let mut c = Collector {
        tol,
        report: ComparisonReport {
            passed: true,
            fields_compared: 0,
            max_deviation: 0.0,
            failures: Vec::new(),
        },
    };
    if csv {
        compare_csv(&mut c, result, baseline)?;
    } else {
        let a: Value = serde_json::from_str(result).map_err(|e| Error::Schema(format!("result: {e}")))?;
        let b: Value = serde_json::from_str(baseline).map_err(|e| Error::Schema(format!("baseline: {e}")))?;
        compare_json(&mut c, "", "", &a, &b)?;
    }
    c.report.passed = c.report.failures.is_empty();
    Ok(c.report)
}

/// Reads one numeric field from a flat JSON baseline such as
/// `{"constant_c": 6.3e-5}`.
pub fn read_scalar(text: &str, name: &str) -> Result<f64> {
    let v: Value = serde_json::from_str(text)?;
    v.get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Schema(format!("missing numeric field '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"scenario": "RateSweep3D"}"#).unwrap();
        assert_eq!(cfg.sweep.points, 16);
        assert_eq!(cfg.tolerances.propagation, 1e-10);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_schema_errors() {
        let e = ScenarioConfig::from_json(r#"{"scenario": "RateSweep3D", "bogus": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = ScenarioConfig::from_json(r#"{"scenario": "Scattering3Photon", "scattering": {"gamma_prime": -1e-3}}"#)
            .unwrap_err();
        assert!(matches!(e, Error::Schema(ref m) if m.contains("gamma_prime")));
        let e = ScenarioConfig::from_json(r#"{"scenario": "Nope"}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = ScenarioConfig::from_json(r#"{"scenario": "OracleCompare", "tolerances": {"propagation": 0}}"#)
            .unwrap_err();
        assert!(matches!(e, Error::Schema(_)));
    }

    #[test]
    fn schema_is_valid_json_listing_every_scenario() {
        let v: Value = serde_json::from_str(CONFIG_SCHEMA).unwrap();
        let names = v["properties"]["scenario"]["enum"].as_array().unwrap();
        assert_eq!(names.len(), 6);
    }

    #[test]
    fn csv_comparison_names_the_row() {
        let base = "omega_m,rate\n1e-3,2.0\n2e-3,4.0\n";
        let bumped = "omega_m,rate\n1e-3,2.0\n2e-3,4.004\n";
        let tol = CompareTolerances {
            default: 1e-4,
            ..Default::default()
        };
        let same = compare_text(base, base, true, &tol).unwrap();
        assert!(same.passed);
        assert_eq!(same.max_deviation, 0.0);
        let r = compare_text(bumped, base, true, &tol).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures[0].location, "row 2, column rate");
        assert!(matches!(
            compare_text("a,b\n1,2\n", "a,c\n1,2\n", true, &tol),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn json_comparison_uses_field_tolerances() {
        let tol = CompareTolerances {
            default: 1e-12,
            fields: [("constant_c".to_string(), 1e-3)].into_iter().collect(),
            ignore: vec![],
        };
        let r = compare_text(
            r#"{"constant_c": 1.0005, "n": 3}"#,
            r#"{"constant_c": 1.0, "n": 3}"#,
            false,
            &tol,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert!(matches!(
            compare_text(r#"{"a": 1}"#, r#"{"b": 1}"#, false, &tol),
            Err(Error::Schema(_))
        ));
    }
}
