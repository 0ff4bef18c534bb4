//! Kendall's τ for shared frailty models indexed by the frailty variance θ.

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{FrailtyError, Result};
use crate::quadrature::{integrate_adaptive, QuadratureSpec};
use crate::special::exp_integral_e1_scaled;
use crate::wl::WLFrailty;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauReport {
    pub theta: f64,
    pub tau_wl: f64,
    pub tau_gamma: f64,
    pub tau_ig: f64,
    /// Error estimate of the quadrature behind `tau_wl`.
    pub wl_quadrature_error: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(FrailtyError::domain("theta", theta));
    }
    Ok(())
}

fn tau_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_subdivisions: 4000,
    }
}

/// ln(1 + eˣ) without overflow.
fn ln1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// τ = 4∫₀^∞ s L(s) L''(s) ds − 1 and the quadrature error estimate.
pub fn kendall_tau_wl_with_error(theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let f = WLFrailty::new(theta)?;
    let (a, b) = (f.a(), f.b());
    let c = theta / (theta + 2.0);
    let (ln_a, ln_half_theta, ln_c, ln_1c) = (a.ln(), (0.5 * theta).ln(), (c / (1.0 + c)).ln(), c.ln_1p());
    // ln[s · s(1+as)^{-2b-4}(1+θs/2)(1+c(s+1))] as a function of l = ln s
    let ln_weighted = |l: f64| {
        2.0 * l - (2.0 * b + 4.0) * ln1p_exp(ln_a + l) + ln1p_exp(ln_half_theta + l) + ln_1c + ln1p_exp(ln_c + l)
    };
    let spec = tau_spec();
    let mut total = 0.0;
    let mut err = 0.0;

    // body: the integrand decays on the scale 1/(a(2b+4)) and turns into a
    // power law beyond 1/a; knots spaced geometrically between the two
    let decay = 1.0 / (a * (2.0 * b + 4.0));
    let knee = 1.0 / a;
    let mut knots = alloc::vec![0.0, decay];
    while *knots.last().unwrap() * 8.0 < knee {
        let next = knots.last().unwrap() * 8.0;
        knots.push(next);
    }
    if knee > decay {
        knots.push(knee);
    }
    let body = |s: f64| {
        if s > 0.0 {
            (ln_weighted(s.ln()) - s.ln()).exp()
        } else {
            0.0
        }
    };
    for w in knots.windows(2) {
        let (v, e) = integrate_adaptive(body, w[0], w[1], &spec)?;
        total += v;
        err += e;
    }

    // tail s = S e^{y/(2b)}: the power-law tail s^{-1-2b} becomes e^{-y}
    let start = *knots.last().unwrap();
    let ln_start = start.ln();
    let rate = 2.0 * b;
    let tail = |y: f64| (ln_weighted(ln_start + y / rate)).exp() / rate;
    let (v, e) = integrate_adaptive(tail, 0.0, f64::INFINITY, &spec)?;
    total += v;
    err += e;

    let k = 4.0 * a * (1.0 + b);
    Ok((k * total - 1.0, k * err))
}

pub fn kendall_tau_wl(theta: f64) -> Result<f64> {
    Ok(kendall_tau_wl_with_error(theta)?.0)
}

/// θ / (θ + 2).
pub fn kendall_tau_gamma(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta / (theta + 2.0))
}

/// ½ − 1/θ + (2/θ²) e^{2/θ} E₁(2/θ).
pub fn kendall_tau_ig(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let x = 2.0 / theta;
    if x > 50.0 {
        // τ = Σ_{k≥1} (-1)^{k+1} (k+1)!/2 · x^{-k}; the leading terms cancel
        // in the closed form, so sum the series directly
        let mut term = 1.0 / x;
        let mut sum = 0.0;
        for k in 1..=40 {
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= -((k + 2) as f64) / x;
        }
        return Ok(sum);
    }
    Ok(0.5 - 0.5 * x + 0.5 * x * x * exp_integral_e1_scaled(x)?)
}

pub fn tau_report(theta: f64) -> Result<TauReport> {
    let (tau_wl, err) = kendall_tau_wl_with_error(theta)?;
    Ok(TauReport {
        theta,
        tau_wl,
        tau_gamma: kendall_tau_gamma(theta)?,
        tau_ig: kendall_tau_ig(theta)?,
        wl_quadrature_error: err,
    })
}
