//! Quadrature rules shared by the mode grids, the dressing integrals and the
//! rate integrals.
//!
//! Fixed Gauss–Legendre nodes come from `gauss-quad`; the adaptive rule is a
//! globally adaptive Gauss–Kronrod (7/15) scheme over complex integrands,
//! bisecting the subinterval with the largest error estimate first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights mapped onto `[a, b]`, ascending in node.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    if n == 1 {
        return vec![(0.5 * (a + b), b - a)];
    }
    let rule = GaussLegendre::new(n.try_into().expect("n >= 2"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule for [`integrate_adaptive`]: the run stops once the summed
/// error estimate drops below `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            abs: 0.0,
            max_intervals: 20_000,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let pairs: [(Complex64, Complex64); 7] = std::array::from_fn(|j| {
        let dx = half * XGK[j];
        (f(center - dx), f(center + dx))
    });
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &(lo, hi)) in pairs.iter().enumerate() {
        kron += (lo + hi) * WGK[j];
        if j % 2 == 1 {
            gauss += (lo + hi) * WG[j / 2];
        }
    }
    // QUADPACK error heuristic: |K - G| overstates the error of K by orders
    // of magnitude once the integrand is resolved.
    let mean = kron * 0.5;
    let mut asc = WGK[7] * (fc - mean).norm();
    for (j, &(lo, hi)) in pairs.iter().enumerate() {
        asc += WGK[j] * ((lo - mean).norm() + (hi - mean).norm());
    }
    let asc = asc * half.abs();
    let kron = kron * half;
    let raw = (kron - gauss * half).norm();
    let err = if asc > 0.0 && raw > 0.0 {
        asc * (200.0 * raw / asc).powf(1.5).min(1.0)
    } else {
        raw
    };
    (kron, err)
}

/// Globally adaptive Gauss–Kronrod integration of a complex integrand.
///
/// `initial_segments` pre-splits `[a, b]`, which helps on long oscillatory
/// ranges. Fails with a numerical error carrying the reached estimate when
/// `max_intervals` is exhausted.
pub fn integrate_adaptive<F>(mut f: F, a: f64, b: f64, tol: Tolerance, initial_segments: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> Complex64,
{
    if a == b {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
        });
    }
    let n0 = initial_segments.max(1);
    let mut heap = BinaryHeap::with_capacity(4 * n0);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err_total = 0.0;
    for i in 0..n0 {
        let lo = a + (b - a) * i as f64 / n0 as f64;
        let hi = if i + 1 == n0 {
            b
        } else {
            a + (b - a) * (i + 1) as f64 / n0 as f64
        };
        let (value, error) = kronrod15(&mut f, lo, hi);
        total += value;
        err_total += error;
        heap.push(Segment {
            a: lo,
            b: hi,
            value,
            error,
        });
    }
    loop {
        let target = tol.abs.max(tol.rel * total.norm());
        if err_total <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::numerical(
                "adaptive quadrature did not converge",
                format!(
                    "interval [{a}, {b}], estimate {total}, error {err_total:e}, target {target:e}, {} subintervals",
                    heap.len()
                ),
            ));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in f64.
            return Err(Error::numerical(
                "adaptive quadrature hit roundoff limit",
                format!("subinterval [{}, {}], error {:e}", worst.a, worst.b, worst.error),
            ));
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err_total += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift from incremental updates.
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let intervals = heap.len();
    for s in heap.into_iter() {
        value += s.value;
        error += s.error;
    }
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}

/// Number of pre-split segments that gives roughly one segment per
/// oscillation period of `exp(i * omega * t)` over a span.
pub(crate) fn oscillation_segments(omega: f64, span: f64) -> usize {
    let periods = (omega.abs() * span.abs() / std::f64::consts::TAU).ceil();
    (periods as usize).clamp(1, 4096)
}

/// Ordinary least squares fit `y = intercept + slope * x`; returns
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}
