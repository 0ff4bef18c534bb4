//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite ranges `[a, ∞)` are mapped onto `[0, 1)` with
//! `x = a + u / (1 - u)` before the adaptive rule runs.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{FrailtyError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(FrailtyError::domain("abs_tol", abs_tol));
        }
        if !(rel_tol > 0.0) {
            return Err(FrailtyError::domain("rel_tol", rel_tol));
        }
        if max_subdivisions == 0 {
            return Err(FrailtyError::domain("max_subdivisions", 0.0));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }
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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
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
        self.err.total_cmp(&other.err)
    }
}

/// 15-point Kronrod estimate with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    if !resk.is_finite() {
        return Err(FrailtyError::domain("integrand value", resk));
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment { lo, hi, value, err })
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let first = gk15(f, lo, hi)?;
    let mut value = first.value;
    let mut err = first.err;
    let mut heap = BinaryHeap::with_capacity(spec.max_subdivisions);
    heap.push(first);
    let mut n_segments = 1;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if err <= tol {
            return Ok((value, err));
        }
        if n_segments >= spec.max_subdivisions {
            return Err(FrailtyError::Quadrature {
                value,
                err_est: err,
                subdivisions: n_segments,
            });
        }
        let worst = heap.pop().expect("heap holds every segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = gk15(f, worst.lo, mid)?;
        let right = gk15(f, mid, worst.hi)?;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        n_segments += 1;
        // re-sum occasionally so incremental updates do not drift
        if n_segments % 32 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// Integrate `f` over `[lower, upper]`; `upper` may be `f64::INFINITY`.
///
/// Returns `(value, error_estimate)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if !lower.is_finite() {
        return Err(FrailtyError::domain("lower integration limit", lower));
    }
    if upper.is_nan() || upper < lower {
        return Err(FrailtyError::domain("upper integration limit", upper));
    }
    if upper == lower {
        return Ok((0.0, 0.0));
    }
    if upper.is_infinite() {
        let g = |u: f64| {
            let one_minus = 1.0 - u;
            let x = lower + u / one_minus;
            // the integrand is assumed to vanish at infinity
            if !x.is_finite() {
                return 0.0;
            }
            f(x) / (one_minus * one_minus)
        };
        adaptive(&g, 0.0, 1.0, spec)
    } else {
        adaptive(&f, lower, upper, spec)
    }
}
