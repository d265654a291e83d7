use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::TimeDependentOperator;
use super::operator::FockStateVector;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions {
    /// Largest accepted local error (2-norm) per step.
    pub tol: f64,
    /// Remove the operator's reference diagonal analytically.
    pub interaction_picture: bool,
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            tol: 1e-10,
            interaction_picture: false,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl PropagateOptions {
    pub fn with_tol(tol: f64) -> Self {
        PropagateOptions {
            tol,
            ..Default::default()
        }
    }

    pub fn interaction(mut self) -> Self {
        self.interaction_picture = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct PropagationReport {
    pub state: FockStateVector,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// `‖ψ(t1)‖ − ‖ψ(t0)‖`.
    pub norm_drift: f64,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Right-hand side `dφ/dt = −i H̃(t) φ`, in the interaction picture with
/// respect to a fixed diagonal `D` when one is given.
struct Rhs<'a, H: TimeDependentOperator + ?Sized> {
    h: &'a H,
    diag: Option<Vec<f64>>,
    t0: f64,
    work: Vec<Complex64>,
    hpsi: Vec<Complex64>,
}

impl<H: TimeDependentOperator + ?Sized> Rhs<'_, H> {
    fn eval(&mut self, t: f64, phi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        match &self.diag {
            None => {
                self.h.apply(t, phi, &mut self.hpsi)?;
                for (o, v) in out.iter_mut().zip(&self.hpsi) {
                    *o = Complex64::new(v.im, -v.re);
                }
            }
            Some(d) => {
                let tau = t - self.t0;
                for ((w, p), e) in self.work.iter_mut().zip(phi).zip(d) {
                    *w = p * Complex64::new(0.0, -e * tau).exp();
                }
                self.h.apply(t, &self.work, &mut self.hpsi)?;
                for (((o, v), w), e) in out.iter_mut().zip(&self.hpsi).zip(&self.work).zip(d) {
                    let rest = (v - w * e) * Complex64::new(0.0, e * tau).exp();
                    *o = Complex64::new(rest.im, -rest.re);
                }
            }
        }
        Ok(())
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `i dψ/dt = H(t) ψ` from `t0` to `t1`.
pub fn propagate<H: TimeDependentOperator + ?Sized>(
    h: &H,
    state: &FockStateVector,
    t0: f64,
    t1: f64,
    opts: &PropagateOptions,
) -> Result<PropagationReport> {
    let mut last = None;
    propagate_observed(h, state, t0, &[t1], opts, |_, s| {
        last = Some(s.clone());
        Ok(())
    })
    .map(|mut rep| {
        if let Some(s) = last {
            rep.state = s;
        }
        rep
    })
}

/// Propagates through ascending output times, calling `observer(t, ψ(t))`
/// at each. The returned report holds the state at the last time.
pub fn propagate_observed<H, F>(
    h: &H,
    state: &FockStateVector,
    t0: f64,
    times: &[f64],
    opts: &PropagateOptions,
    mut observer: F,
) -> Result<PropagationReport>
where
    H: TimeDependentOperator + ?Sized,
    F: FnMut(f64, &FockStateVector) -> Result<()>,
{
    let dim = h.dim();
    if state.amplitudes.len() != dim {
        return Err(Error::InvalidConfig(format!(
            "state dimension {} does not match operator dimension {dim}",
            state.amplitudes.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("propagation tolerance must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidConfig("output times must be ascending and >= t0".into()));
    }
    let mut rhs = Rhs {
        h,
        diag: opts.interaction_picture.then(|| h.reference_diagonal()),
        t0,
        work: vec![ZERO; dim],
        hpsi: vec![ZERO; dim],
    };
    let norm0 = state.norm();
    let mut y = state.amplitudes.clone();
    let mut t = t0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![ZERO; dim]; 7];
    let mut stage = vec![ZERO; dim];
    let mut y5 = vec![ZERO; dim];
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    rhs.eval(t, &y, &mut k[0])?;
    let mut step = match opts.initial_step {
        Some(s) => s,
        None => {
            let d = norm(&k[0]).max(1e-300);
            (0.01 * opts.tol.powf(0.2) / d * norm(&y).max(1.0)).min(opts.max_step)
        }
    };
    let mut out_state = state.clone();
    for &t_out in times {
        while t < t_out {
            if accepted + rejected >= opts.max_steps {
                return Err(Error::numerical(
                    "propagation exceeded the step budget",
                    format!("t = {t}, steps = {}", accepted + rejected),
                ));
            }
            let mut hstep = step.min(opts.max_step);
            let last = t + hstep >= t_out;
            if last {
                hstep = t_out - t;
            }
            if hstep <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::Stiffness {
                    t,
                    step: hstep,
                    norm_drift: norm(&y) - norm0,
                });
            }
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (a * hstep);
                        }
                    }
                    stage[i] = acc;
                }
                rhs.eval(t + C[s] * hstep, &stage, &mut k[s])?;
            }
            let mut err2 = 0.0;
            for i in 0..dim {
                let mut s5 = ZERO;
                let mut e = ZERO;
                for j in 0..7 {
                    s5 += k[j][i] * B5[j];
                    e += k[j][i] * (B5[j] - B4[j]);
                }
                y5[i] = y[i] + s5 * hstep;
                err2 += (e * hstep).norm_sqr();
            }
            let err = err2.sqrt();
            if !err.is_finite() {
                return Err(Error::numerical(
                    "non-finite state during propagation",
                    format!("t = {t}"),
                ));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 5.0)
            };
            if err <= opts.tol {
                t = if last { t_out } else { t + hstep };
                std::mem::swap(&mut y, &mut y5);
                // FSAL: the seventh stage is f(t + h, y5)
                k.swap(0, 6);
                accepted += 1;
                if !last || factor < 1.0 {
                    step = hstep * factor;
                }
            } else {
                rejected += 1;
                step = hstep * factor.min(1.0);
                if step <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Stiffness {
                        t,
                        step,
                        norm_drift: norm(&y) - norm0,
                    });
                }
            }
        }
        let mut amps = y.clone();
        if let Some(d) = &rhs.diag {
            let tau = t_out - t0;
            for (a, e) in amps.iter_mut().zip(d) {
                *a *= Complex64::new(0.0, -e * tau).exp();
            }
        }
        out_state = FockStateVector {
            amplitudes: amps,
            ..state.clone()
        };
        observer(t_out, &out_state)?;
    }
    Ok(PropagationReport {
        norm_drift: out_state.norm() - norm0,
        state: out_state,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}
