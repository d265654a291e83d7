//! Acceptance suite. Every criterion prints one PASS/FAIL line with the
//! measured numbers; the test fails if any criterion does.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use vacuum_shake::coupling::{CouplingProfile, Trajectory};
use vacuum_shake::dressing::{counter_rotating_residual, lambda_matrix, DressedFrame};
use vacuum_shake::fock::{
    enumerate_basis, propagate, FockStateVector, OriginalHamiltonian, PropagateOptions, TransformedHamiltonian, Variant,
};
use vacuum_shake::modes::{build_freespace_quadrature, build_waveguide_grid};
use vacuum_shake::radiation::pair_amplitude;
use vacuum_shake::scattering::excited_amplitude_scattering;
use vacuum_shake::scenario::{execute, read_scalar, ScenarioConfig, ScenarioOutput};

const FROZEN_RATE_CONSTANT: &str = include_str!("../baselines/rate_constant.json");

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn scenario(json: &str) -> ScenarioOutput {
    execute(&ScenarioConfig::from_json(json).unwrap()).unwrap()
}

fn summary_f64(out: &ScenarioOutput, key: &str) -> f64 {
    out.summary[key].as_f64().unwrap_or(f64::NAN)
}

fn static_null() -> Outcome {
    let grid = build_waveguide_grid(8, 1.2, 2.0 * PI / 0.3, 1.0).unwrap();
    let p1 = CouplingProfile::waveguide(0.2, 1.0).unwrap();
    let grid3 = build_freespace_quadrature(3, 2, 2, 2.0, 1.0).unwrap();
    let p3 = CouplingProfile::static_atom(0.05, [0.0, 0.0, 1.0], 1.0).unwrap();
    let mut worst = 0.0f64;
    for (grid, p) in [(&grid, &p1), (&grid3, &p3)] {
        let frame = DressedFrame::exact(grid, p);
        let lam_max = lambda_matrix(&frame, 0.0)
            .unwrap()
            .lambda
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        for i in 0..=20 {
            let t = 5.0 * i as f64;
            let free = pair_amplitude(&frame, t).unwrap().max_free();
            worst = worst.max(free / lam_max);
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |free part| / max |Lambda| = {worst:.2e} (limit 1e-9)"),
    )
}

fn counter_rotating_elimination() -> Outcome {
    let grid = build_waveguide_grid(8, 1.2, 2.0 * PI / 0.3, 1.0).unwrap();
    let traj = Trajectory {
        r_m: 0.05 / 0.3,
        omega_m: 0.3,
        r_hat: [0.0, 0.0, 1.0],
    };
    let p = CouplingProfile::oscillating_waveguide(0.2, 1.0, traj).unwrap();
    let mut frame = DressedFrame::exact(&grid, &p);
    frame.quad_rel_tol = 1e-14;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut worst_lib = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(0..grid.len());
        let t = rng.random_range(1.0..100.0);
        let g = frame.g(k, t).unwrap();
        // ξ̇ from a seven-point central difference of ξ(t), not from the frame.
        let h = 0.02;
        let xi = |s: f64| frame.xi(k, s).unwrap();
        let xi_dot = (45.0 * (xi(t + h) - xi(t - h)) - 9.0 * (xi(t + 2.0 * h) - xi(t - 2.0 * h))
            + (xi(t + 3.0 * h) - xi(t - 3.0 * h)))
            / (60.0 * h);
        let omega = grid.modes[k].omega + p.omega_e;
        let r = -omega * xi(t) + g - Complex64::new(0.0, 1.0) * xi_dot;
        worst = worst.max(r.norm() / g.norm());
        worst_lib = worst_lib.max(counter_rotating_residual(&frame, k, t).unwrap().norm() / g.norm());
    }
    outcome(
        worst <= 1e-9 && worst_lib <= 1e-9,
        format!(
            "max |residual| / |g| over 100 samples = {worst:.2e} with a finite-difference derivative, \
             {worst_lib:.2e} as reported (limit 1e-9)"
        ),
    )
}

fn appendix_a() -> Outcome {
    let out = scenario(r#"{"scenario": "AppendixAVerify", "residual": {"xi_max": [0.04, 0.02]}}"#);
    let levels = out.summary["levels"].as_array().unwrap();
    let r = |i: usize| levels[i]["report"]["residual"].as_f64().unwrap();
    let ratio = r(0) / r(1);
    let scaling = (6.0..=10.0).contains(&ratio);
    let absolute = r(1) < 1e-5;
    outcome(
        scaling && absolute,
        format!(
            "R(0.04)/R(0.02) = {ratio:.3} (want [6, 10]: {}); R(0.02) = {:.3e} (want < 1e-5: {})",
            ok(scaling),
            r(1),
            ok(absolute)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "missed"
    }
}

fn slope_3d() -> (Outcome, f64) {
    let out = scenario(r#"{"scenario": "RateSweep3D"}"#);
    let s = summary_f64(&out, "exponent");
    let c = summary_f64(&out, "constant_c");
    (
        outcome(
            (s - 7.0).abs() <= 0.1,
            format!("slope = {s:.4} (want 7 +- 0.1), 16 points on [1e-3, 1e-2]"),
        ),
        c,
    )
}

fn slope_1d() -> Outcome {
    let out = scenario(r#"{"scenario": "RateSweep1D"}"#);
    let s = summary_f64(&out, "exponent");
    outcome((s - 3.0).abs() <= 0.1, format!("slope = {s:.4} (want 3 +- 0.1)"))
}

fn rate_constant(c: f64) -> Outcome {
    let frozen = read_scalar(FROZEN_RATE_CONSTANT, "constant_c").unwrap();
    let in_range = (1e-3..=1e-1).contains(&c);
    let rel = (c - frozen).abs() / frozen;
    let regression = rel <= 1e-3;
    outcome(
        in_range && regression,
        format!(
            "C = {c:.4e} (want [1e-3, 1e-1]: {}); vs frozen {frozen:.6e}: rel {rel:.1e} (want <= 1e-3: {})",
            ok(in_range),
            ok(regression)
        ),
    )
}

fn oracle_pairs() -> Outcome {
    let run = |xi: f64| {
        let out = scenario(&format!(
            r#"{{"scenario": "OracleCompare", "oracle": {{"xi_max": {xi}}}}}"#
        ));
        summary_f64(&out, "dominant_rel_deviation")
    };
    let d1 = run(0.03);
    let d2 = run(0.015);
    let ratio = d1 / d2;
    let close = d1 <= 0.1;
    let halves = (1.5..=2.5).contains(&ratio);
    outcome(
        close && halves,
        format!(
            "rel deviation {d1:.3} at xi_max 0.03 (want <= 0.1: {}); {d2:.3} at 0.015, ratio {ratio:.2} (want ~2: {})",
            ok(close),
            ok(halves)
        ),
    )
}

fn decay() -> Outcome {
    let out = scenario(r#"{"scenario": "OracleCompare", "oracle": {"kind": "decay"}}"#);
    let fit = summary_f64(&out, "gamma_fit");
    let want = summary_f64(&out, "gamma_expected");
    let rel = summary_f64(&out, "rel_error");
    let n = out.summary["n_modes"].as_u64().unwrap();
    outcome(
        rel <= 0.03 && n == 200,
        format!("gamma fit {fit:.5e} vs {want:.5e}: rel {rel:.2e} (want <= 3e-2), {n} modes"),
    )
}

/// RK4 on `dc/dt = −(γ/2) c − i √γ √γ' e^{−γ' t/2}` from `c(0) = 0`.
fn convolution_oracle(gamma: f64, gamma_p: f64, tau: f64, omega_e: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let drive = |t: f64| -i * (gamma * gamma_p).sqrt() * (-0.5 * gamma_p * t).exp();
    let f = |t: f64, c: Complex64| -0.5 * gamma * c + drive(t);
    let steps = 20_000;
    let h = tau / steps as f64;
    let mut c = Complex64::new(0.0, 0.0);
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = f(t, c);
        let k2 = f(t + 0.5 * h, c + k1 * (0.5 * h));
        let k3 = f(t + 0.5 * h, c + k2 * (0.5 * h));
        let k4 = f(t + h, c + k3 * h);
        c += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
        t += h;
    }
    c * Complex64::new(0.0, -0.5 * omega_e * tau).exp()
}

fn scattering_amplitude() -> Outcome {
    let gamma = 1e-3;
    let mut worst = 0.0f64;
    for ratio in [0.5, 1.0, 2.0] {
        for n in 1..=20 {
            let tau = n as f64 * 0.5 / gamma;
            let a = excited_amplitude_scattering(gamma, ratio * gamma, 1.0, tau).unwrap();
            let b = convolution_oracle(gamma, ratio * gamma, tau, 1.0);
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max rel deviation from convolution = {worst:.2e} over 60 points (limit 1e-6)"),
    )
}

fn three_photon() -> Outcome {
    let out = scenario(r#"{"scenario": "Scattering3Photon"}"#);
    let mf = summary_f64(&out, "mass_fraction");
    let shell = out.artifact("on_shell.csv").unwrap();
    let values: Vec<f64> = shell
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi / lo;
    let localized = mf >= 0.9;
    let flat = spread < 3.0;
    outcome(
        localized && flat,
        format!(
            "mass fraction {mf:.5} (want >= 0.9: {}); on-shell |C| max/min = {spread:.1} over {} points (want < 3: {})",
            ok(localized),
            values.len(),
            ok(flat)
        ),
    )
}

fn propagator_hygiene() -> Outcome {
    let grid = build_waveguide_grid(4, 0.6, 2.0 * PI / 0.3, 1.0).unwrap();
    let traj = Trajectory {
        r_m: 0.05 / 0.3,
        omega_m: 0.3,
        r_hat: [0.0, 0.0, 1.0],
    };
    let p = CouplingProfile::oscillating_waveguide(0.1, 1.0, traj).unwrap();
    let basis = enumerate_basis(4, 3).unwrap();
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    for (i, a) in amps.iter_mut().enumerate().take(10) {
        *a = Complex64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64);
    }
    let mut psi = FockStateVector::from_amplitudes(&basis, amps).unwrap();
    psi.normalize();
    let opts = PropagateOptions::with_tol(1e-11).interaction();
    let h = OriginalHamiltonian::new(&basis, &grid, &p).unwrap();
    let drift = propagate(&h, &psi, 0.0, 1000.0, &opts).unwrap().norm_drift.abs();

    // One excitation sector only, so N_exc is sharp.
    let frame = DressedFrame::adiabatic(&grid, &p);
    let h1 = TransformedHamiltonian::new(&basis, &frame, Variant::H0H1Only).unwrap();
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    amps[1] = Complex64::new(0.8, 0.0);
    amps[2] = Complex64::new(0.0, 0.6);
    let start = FockStateVector::from_amplitudes(&basis, amps).unwrap();
    let (n0, _) = start.excitation_moments(&basis);
    let end = propagate(&h1, &start, 0.0, 1000.0, &opts).unwrap().state;
    let (n1, var) = end.excitation_moments(&basis);
    let dn = (n1 - n0).abs().max(var.abs());

    // The full Hamiltonian mixes sectors straight away.
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    amps[0] = Complex64::new(1.0, 0.0);
    let ground = FockStateVector::from_amplitudes(&basis, amps).unwrap();
    let later = propagate(&h, &ground, 0.0, 1.0, &opts).unwrap().state;
    let (_, spread) = later.excitation_moments(&basis);
    outcome(
        drift <= 1e-9 && dn <= 1e-10 && spread > 0.0,
        format!(
            "norm drift {drift:.2e} over t = 1000 (limit 1e-9); N_exc change under H0+H1 {dn:.2e} (limit 1e-10); \
             full-H N_exc variance at t = 1 {spread:.2e} (want > 0)"
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut stderr = std::io::stderr();
    let mut failed = Vec::new();
    let mut report = |id: &str, name: &str, budget: u64, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let pass = o.passed && in_time;
        // Written straight to the handle so the lines survive output capture.
        writeln!(
            stderr,
            "{} [{id}] {name}: {} [{:.2}s / {budget}s{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            if in_time { "" } else { " over budget" }
        )
        .unwrap();
        if !pass {
            failed.push(id.to_string());
        }
    };

    let mut c = f64::NAN;
    report("1", "static coupling emits no free pairs", 10, &mut static_null);
    report(
        "2",
        "exact dressing removes counter-rotating terms",
        10,
        &mut counter_rotating_elimination,
    );
    report(
        "3",
        "second-order frame change is third-order accurate",
        60,
        &mut appendix_a,
    );
    report("4", "3D pair rate scales as omega_m^7", 120, &mut || {
        let (o, constant) = slope_3d();
        c = constant;
        o
    });
    report("5", "waveguide pair rate scales as omega_m^3", 60, &mut slope_1d);
    report("6", "rate constant order and frozen baseline", 120, &mut || {
        rate_constant(c)
    });
    report(
        "7",
        "oracle pair production matches perturbation theory",
        300,
        &mut oracle_pairs,
    );
    report("8", "oracle decay rate matches the golden rule", 300, &mut decay);
    report(
        "9",
        "excited amplitude matches the convolution",
        10,
        &mut scattering_amplitude,
    );
    report(
        "10",
        "three-photon spectrum localization and flatness",
        120,
        &mut three_photon,
    );
    report(
        "11",
        "propagator norm and excitation hygiene",
        60,
        &mut propagator_hygiene,
    );

    let summary: Value = serde_json::json!({ "failed": failed });
    assert!(failed.is_empty(), "acceptance criteria failed: {summary}");
}
