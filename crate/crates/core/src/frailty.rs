//! Marginal and conditional quantities of the shared WL frailty model.
//!
//! Subject-level linear predictors enter inside the cluster sum:
//! `S* = Σ_j Λ0(t_ij) exp(x_ij'β)`.

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::baseline::Baseline;
use crate::data::{check_beta, dot, Cluster, Dataset};
use crate::error::{FrailtyError, Result};
use crate::special::ln_gamma_unchecked;
use crate::wl::{WLFrailty, WLGeneral};

/// Posterior WL parameters of one cluster: `a_ψ = (S* + 1/a_θ)^{-1}` and
/// `b_ψ = r_i + b_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSufficients {
    pub a_psi: f64,
    pub b_psi: f64,
}

/// λ(t | z, x) = λ0(t) z exp(x'β).
pub fn conditional_hazard(t: f64, z: f64, x: &[f64], beta: &[f64], baseline: &Baseline) -> Result<f64> {
    if x.len() != beta.len() {
        return Err(FrailtyError::Dimension {
            what: "coefficient vector",
            expected: x.len(),
            actual: beta.len(),
        });
    }
    if !(z >= 0.0) {
        return Err(FrailtyError::domain("frailty value", z));
    }
    Ok(baseline.hazard(t)? * z * dot(x, beta).exp())
}

fn weighted_cumhaz<X: AsRef<[f64]>>(times: &[f64], xs: &[X], beta: &[f64], baseline: &Baseline) -> Result<f64> {
    if times.len() != xs.len() {
        return Err(FrailtyError::Dimension {
            what: "covariate rows",
            expected: times.len(),
            actual: xs.len(),
        });
    }
    let mut total = 0.0;
    for (&t, x) in times.iter().zip(xs) {
        let x = x.as_ref();
        if x.len() != beta.len() {
            return Err(FrailtyError::Dimension {
                what: "coefficient vector",
                expected: x.len(),
                actual: beta.len(),
            });
        }
        if !(t > 0.0) {
            return Err(FrailtyError::domain("follow-up time", t));
        }
        total += baseline.cumulative(t) * dot(x, beta).exp();
    }
    Ok(total)
}

/// Joint marginal survival S(t_1, …, t_n) = L(S*) of one cluster.
pub fn cluster_survival<X: AsRef<[f64]>>(
    times: &[f64],
    xs: &[X],
    beta: &[f64],
    frailty: &WLFrailty,
    baseline: &Baseline,
) -> Result<f64> {
    Ok(frailty.laplace(weighted_cumhaz(times, xs, beta, baseline)?))
}

/// Log of the joint marginal density of a cluster in which every subject
/// failed: `Σ_j ln(λ0(t_j) e^{x_j'β}) + ln|L⁽ⁿ⁾(S*)|`.
pub fn ln_cluster_density<X: AsRef<[f64]>>(
    times: &[f64],
    xs: &[X],
    beta: &[f64],
    frailty: &WLFrailty,
    baseline: &Baseline,
) -> Result<f64> {
    let s_star = weighted_cumhaz(times, xs, beta, baseline)?;
    if times.is_empty() {
        return Err(FrailtyError::InvalidData(
            "cluster density needs at least one time".into(),
        ));
    }
    let mut acc = frailty.ln_abs_laplace_deriv(times.len(), s_star)?;
    for (&t, x) in times.iter().zip(xs) {
        acc += baseline.hazard(t)?.ln() + dot(x.as_ref(), beta);
    }
    Ok(acc)
}

pub fn cluster_density<X: AsRef<[f64]>>(
    times: &[f64],
    xs: &[X],
    beta: &[f64],
    frailty: &WLFrailty,
    baseline: &Baseline,
) -> Result<f64> {
    Ok(ln_cluster_density(times, xs, beta, frailty, baseline)?.exp())
}

fn updated_scale(frailty: &WLFrailty, cumhaz: f64) -> f64 {
    frailty.a() / (1.0 + frailty.a() * cumhaz)
}

/// Law of Z among survivors at `t` (no covariates): WL(α = 1/A_θ, φ = b_θ)
/// with `A_θ = a_θ / (1 + a_θ Λ0(t))`.
pub fn survivor_frailty_law(t: f64, frailty: &WLFrailty, baseline: &Baseline) -> Result<WLGeneral> {
    if !(t > 0.0) {
        return Err(FrailtyError::domain("time", t));
    }
    WLGeneral::new(1.0 / updated_scale(frailty, baseline.cumulative(t)), frailty.b())
}

/// Law of Z given a failure at `t`: WL(α = 1/A_θ, φ = b_θ + 1).
pub fn failure_frailty_law(t: f64, frailty: &WLFrailty, baseline: &Baseline) -> Result<WLGeneral> {
    if !(t > 0.0) {
        return Err(FrailtyError::domain("time", t));
    }
    WLGeneral::new(1.0 / updated_scale(frailty, baseline.cumulative(t)), frailty.b() + 1.0)
}

pub fn cluster_sufficients(
    cluster: &Cluster,
    beta: &[f64],
    frailty: &WLFrailty,
    baseline: &Baseline,
) -> ClusterSufficients {
    let s_star: f64 = cluster
        .subjects
        .iter()
        .map(|s| baseline.cumulative(s.time) * dot(&s.covariates, beta).exp())
        .sum();
    ClusterSufficients {
        a_psi: 1.0 / (s_star + 1.0 / frailty.a()),
        b_psi: cluster.n_events() as f64 + frailty.b(),
    }
}

/// Posterior law of a cluster's frailty given its data.
pub fn posterior_frailty(
    cluster: &Cluster,
    beta: &[f64],
    frailty: &WLFrailty,
    baseline: &Baseline,
) -> Result<(WLGeneral, ClusterSufficients)> {
    if let Some(s) = cluster.subjects.first() {
        if s.covariates.len() != beta.len() {
            return Err(FrailtyError::Dimension {
                what: "coefficient vector",
                expected: s.covariates.len(),
                actual: beta.len(),
            });
        }
    }
    let suff = cluster_sufficients(cluster, beta, frailty, baseline);
    Ok((WLGeneral::new(1.0 / suff.a_psi, suff.b_psi)?, suff))
}

/// Observed-data log-likelihood ℓ(β, Λ0, θ).
///
/// Returns `-∞` when the baseline hazard vanishes at an observed failure
/// (for a step baseline: a failure time that is not a jump point).
pub fn observed_loglik(beta: &[f64], frailty: &WLFrailty, baseline: &Baseline, data: &Dataset) -> Result<f64> {
    observed_loglik_with(beta, frailty, baseline, data, true)
}

/// As [`observed_loglik`]; `include_hazard_factor = false` drops the
/// `Σ δ ln λ0(t)` term, which is constant in (β, θ) for a fixed baseline.
pub fn observed_loglik_with(
    beta: &[f64],
    frailty: &WLFrailty,
    baseline: &Baseline,
    data: &Dataset,
    include_hazard_factor: bool,
) -> Result<f64> {
    check_beta(data, beta)?;
    let (th, a, b) = (frailty.theta(), frailty.a(), frailty.b());
    let per_cluster = th.ln() - (b + 1.0) * a.ln() - core::f64::consts::LN_2 - ln_gamma_unchecked(b);
    let mut total = 0.0;
    for c in data.clusters() {
        let suff = cluster_sufficients(c, beta, frailty, baseline);
        let (ap, bp) = (suff.a_psi, suff.b_psi);
        total += per_cluster + ln_gamma_unchecked(bp) + bp * ap.ln() + (ap * bp).ln_1p();
        for s in c.subjects.iter().filter(|s| s.event) {
            total += dot(&s.covariates, beta);
            if include_hazard_factor {
                match baseline.hazard(s.time) {
                    Ok(h) if h > 0.0 => total += h.ln(),
                    Ok(_) | Err(FrailtyError::NotJumpPoint { .. }) => return Ok(f64::NEG_INFINITY),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(total)
}
