//! EM estimation of (β, Λ0, θ) with a nonparametric or Weibull baseline.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::association::kendall_tau_wl;
use crate::baseline::Baseline;
use crate::cox::{fit_cox_indexed, RiskIndex};
use crate::data::{check_beta, Dataset};
use crate::error::{FrailtyError, Result};
use crate::frailty::{observed_loglik_with, posterior_frailty};
use crate::special::{digamma_unchecked, ln_gamma_unchecked};
use crate::weibull::weibull_regression_offset;
use crate::wl::{WLFrailty, THETA_MAX, THETA_MIN};

/// Offsets ln ẑ are clamped to ±this value.
const OFFSET_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Nonparametric,
    Weibull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub baseline_kind: BaselineKind,
    /// Stopping tolerance on the sup-norm change of (β, θ).
    pub eps: f64,
    pub max_em_iter: usize,
    pub theta_init: f64,
    /// Gradient tolerance of the inner Newton solvers.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Keep the Σ δ ln λ0(t) term in the reported log-likelihood.
    pub include_hazard_factor: bool,
    pub standard_errors: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            baseline_kind: BaselineKind::Nonparametric,
            eps: 1e-6,
            max_em_iter: 500,
            theta_init: 0.5,
            newton_tol: 1e-8,
            newton_max_iter: 100,
            include_hazard_factor: true,
            standard_errors: true,
        }
    }
}

impl FitConfig {
    pub fn nonparametric() -> Self {
        Self::default()
    }

    pub fn weibull() -> Self {
        Self {
            baseline_kind: BaselineKind::Weibull,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(FrailtyError::domain("eps", self.eps));
        }
        if self.max_em_iter == 0 {
            return Err(FrailtyError::domain("max_em_iter", 0.0));
        }
        if !(self.theta_init >= THETA_MIN && self.theta_init <= THETA_MAX) {
            return Err(FrailtyError::domain("theta_init", self.theta_init));
        }
        if !(self.newton_tol > 0.0) {
            return Err(FrailtyError::domain("newton_tol", self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return Err(FrailtyError::domain("newton_max_iter", 0.0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub theta_hat: f64,
    pub baseline_hat: Baseline,
    /// NaN when standard errors were not requested or not reached.
    pub se_beta: Vec<f64>,
    pub se_theta: f64,
    pub z_hat: Vec<f64>,
    pub kappa_hat: Vec<f64>,
    pub loglik_trace: Vec<f64>,
    pub n_iter: usize,
    pub kendall_tau: f64,
    pub cluster_ids: Vec<String>,
    pub covariate_names: Vec<String>,
    /// θ̂ sits on the edge of the search interval.
    pub theta_at_boundary: bool,
    /// Iterations whose log-likelihood fell by more than the ascent slack.
    pub ascent_violations: usize,
}

impl FitResult {
    /// Final observed log-likelihood.
    pub fn loglik(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Posterior means ẑ_i and E[ln Z_i] (κ̂_i) for every cluster.
pub fn e_step(data: &Dataset, beta: &[f64], theta: f64, baseline: &Baseline) -> Result<(Vec<f64>, Vec<f64>)> {
    check_beta(data, beta)?;
    let frailty = WLFrailty::new(theta)?;
    let mut z = Vec::with_capacity(data.n_clusters());
    let mut k = Vec::with_capacity(data.n_clusters());
    for c in data.clusters() {
        let (post, _) = posterior_frailty(c, beta, &frailty, baseline)?;
        let mom = post.moments();
        z.push(mom.mean);
        k.push(mom.elog);
    }
    Ok((z, k))
}

#[derive(Debug, Clone, Copy)]
struct Q2Stats {
    m: f64,
    sum_z: f64,
    sum_kappa: f64,
}

impl Q2Stats {
    fn new(z_hat: &[f64], kappa_hat: &[f64]) -> Result<Self> {
        if z_hat.len() != kappa_hat.len() {
            return Err(FrailtyError::Dimension {
                what: "kappa_hat",
                expected: z_hat.len(),
                actual: kappa_hat.len(),
            });
        }
        Ok(Self {
            m: z_hat.len() as f64,
            sum_z: z_hat.iter().sum(),
            sum_kappa: kappa_hat.iter().sum(),
        })
    }

    fn value(&self, theta: f64) -> f64 {
        let f = WLFrailty::new(theta).expect("theta checked by caller");
        let (a, b) = (f.a(), f.b());
        self.m * (theta.ln() - ln_gamma_unchecked(b) - (b + 1.0) * a.ln()) + (b - 1.0) * self.sum_kappa - self.sum_z / a
    }

    fn derivative(&self, theta: f64) -> f64 {
        let f = WLFrailty::new(theta).expect("theta checked by caller");
        let (a, b) = (f.a(), f.b());
        let tp2 = theta + 2.0;
        let tp4 = theta + 4.0;
        let db = -8.0 * tp2 / (theta * theta * tp4 * tp4);
        let da = (theta * theta + 4.0 * theta + 8.0) / (2.0 * tp2 * tp2);
        self.m * (1.0 / theta - digamma_unchecked(b) * db - db * a.ln() - (b + 1.0) * da / a)
            + db * self.sum_kappa
            + da / (a * a) * self.sum_z
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(FrailtyError::domain("theta", theta));
    }
    Ok(())
}

/// Expected complete-data log-likelihood of the frailties, up to terms free
/// of θ: m[ln θ − ln Γ(b_θ) − (b_θ+1) ln a_θ] + (b_θ−1)Σκ̂ − Σẑ / a_θ.
pub fn q2(theta: f64, z_hat: &[f64], kappa_hat: &[f64]) -> Result<f64> {
    check_theta(theta)?;
    Ok(Q2Stats::new(z_hat, kappa_hat)?.value(theta))
}

/// dQ2/dθ.
pub fn q2_derivative(theta: f64, z_hat: &[f64], kappa_hat: &[f64]) -> Result<f64> {
    check_theta(theta)?;
    Ok(Q2Stats::new(z_hat, kappa_hat)?.derivative(theta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaUpdate {
    pub theta: f64,
    pub at_boundary: bool,
}

/// Maximize Q2 over θ ∈ [THETA_MIN, THETA_MAX]: log-spaced grid, golden
/// section inside the best bracket, then Newton on dQ2/dθ. Never returns a
/// point with lower Q2 than `theta_prev`.
pub fn m2_maximize_theta(z_hat: &[f64], kappa_hat: &[f64], theta_prev: f64) -> Result<ThetaUpdate> {
    check_theta(theta_prev)?;
    let stats = Q2Stats::new(z_hat, kappa_hat)?;
    if stats.m == 0.0 {
        return Ok(ThetaUpdate {
            theta: theta_prev,
            at_boundary: false,
        });
    }
    let q = |u: f64| stats.value(u.exp());
    let (u_lo, u_hi) = (THETA_MIN.ln(), THETA_MAX.ln());
    const N: usize = 121;
    let grid: Vec<f64> = (0..N)
        .map(|k| u_lo + (u_hi - u_lo) * k as f64 / (N - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&u| q(u)).collect();
    let best = (0..N).fold(0, |b, k| if values[k] > values[b] { k } else { b });

    let (theta, at_boundary) = if best == 0 && stats.derivative(THETA_MIN) <= 0.0 {
        (THETA_MIN, true)
    } else if best == N - 1 && stats.derivative(THETA_MAX) >= 0.0 {
        (THETA_MAX, true)
    } else {
        let mut lo = grid[best.saturating_sub(1)];
        let mut hi = grid[(best + 1).min(N - 1)];
        // golden section on u = ln θ
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - r * (hi - lo);
        let mut d = lo + r * (hi - lo);
        let (mut fc, mut fd) = (q(c), q(d));
        while hi - lo > 1e-7 {
            if fc >= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - r * (hi - lo);
                fc = q(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + r * (hi - lo);
                fd = q(d);
            }
        }
        let mut u = 0.5 * (lo + hi);
        // Newton polish on g(u) = θ Q2'(θ), kept inside a widened bracket
        let (blo, bhi) = (lo - 1e-3, hi + 1e-3);
        let g = |u: f64| u.exp() * stats.derivative(u.exp());
        for _ in 0..20 {
            let h = 1e-5;
            let gu = g(u);
            let dg = (g(u + h) - g(u - h)) / (2.0 * h);
            if !(dg < 0.0) {
                break;
            }
            let next = u - gu / dg;
            if !(next > blo && next < bhi) || q(next) < q(u) {
                break;
            }
            let done = (next - u).abs() < 1e-14;
            u = next;
            if done {
                break;
            }
        }
        let u = u.clamp(u_lo, u_hi);
        (u.exp(), false)
    };
    if stats.value(theta) < stats.value(theta_prev) - 1e-12 {
        return Ok(ThetaUpdate {
            theta: theta_prev,
            at_boundary: false,
        });
    }
    if at_boundary {
        log::warn!("theta maximizer at the search boundary ({theta})");
    }
    Ok(ThetaUpdate { theta, at_boundary })
}

fn offsets_from(z_hat: &[f64]) -> Vec<f64> {
    let mut clamped = false;
    let out = z_hat
        .iter()
        .map(|z| {
            let o = z.ln();
            if !(o.abs() <= OFFSET_CLAMP) {
                clamped = true;
            }
            o.clamp(-OFFSET_CLAMP, OFFSET_CLAMP)
        })
        .collect();
    if clamped {
        log::warn!("frailty offsets clamped to ±{OFFSET_CLAMP}");
    }
    out
}

struct EmState {
    beta: Vec<f64>,
    theta: f64,
    baseline: Baseline,
}

/// Shared EM loop; `m1` maps (offsets, current β) to the updated β and
/// baseline.
fn run_em<M>(data: &Dataset, config: &FitConfig, init: EmState, ascent_slack: f64, mut m1: M) -> Result<FitResult>
where
    M: FnMut(&[f64], &[f64]) -> Result<(Vec<f64>, Baseline)>,
{
    let loglik = |s: &EmState| {
        observed_loglik_with(
            &s.beta,
            &WLFrailty::new(s.theta)?,
            &s.baseline,
            data,
            config.include_hazard_factor,
        )
    };
    let mut state = init;
    let mut trace = vec![loglik(&state)?];
    let mut violations = 0;
    let mut at_boundary = false;
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < config.max_em_iter {
        n_iter += 1;
        let (z, k) = e_step(data, &state.beta, state.theta, &state.baseline)?;
        let offsets = offsets_from(&z);
        let (beta, baseline) = m1(&offsets, &state.beta)?;
        let step = m2_maximize_theta(&z, &k, state.theta)?;
        let delta = state
            .beta
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold((state.theta - step.theta).abs(), f64::max);
        state = EmState {
            beta,
            theta: step.theta,
            baseline,
        };
        at_boundary = step.at_boundary;
        let ll = loglik(&state)?;
        let prev = *trace.last().expect("trace starts non-empty");
        if ll < prev - ascent_slack {
            violations += 1;
            log::warn!("EM log-likelihood decreased by {} at iteration {n_iter}", prev - ll);
        }
        trace.push(ll);
        if delta < config.eps {
            converged = true;
            break;
        }
    }
    let (z_hat, kappa_hat) = e_step(data, &state.beta, state.theta, &state.baseline)?;
    let mut fit = FitResult {
        se_beta: vec![f64::NAN; state.beta.len()],
        se_theta: f64::NAN,
        beta_hat: state.beta,
        theta_hat: state.theta,
        baseline_hat: state.baseline,
        z_hat,
        kappa_hat,
        loglik_trace: trace,
        n_iter,
        kendall_tau: f64::NAN,
        cluster_ids: data.clusters().iter().map(|c| c.id.clone()).collect(),
        covariate_names: data.covariate_names().to_vec(),
        theta_at_boundary: at_boundary,
        ascent_violations: violations,
    };
    if !converged {
        return Err(FrailtyError::EmMaxIter {
            iterations: n_iter,
            partial: alloc::boxed::Box::new(fit),
        });
    }
    fit.kendall_tau = kendall_tau_wl(fit.theta_hat)?;
    if config.standard_errors {
        let (se_beta, se_theta) = std_errors_with(&fit, data, config.include_hazard_factor)?;
        fit.se_beta = se_beta;
        fit.se_theta = se_theta;
    }
    Ok(fit)
}

/// Semiparametric fit: Cox partial likelihood with offsets ln ẑ_i and the
/// Breslow estimator in the M1 step.
pub fn fit_semiparametric(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    data.check_fittable()?;
    let index = RiskIndex::new(data)?;
    let zero = vec![0.0; data.n_clusters()];
    let beta0 = fit_cox_indexed(
        &index,
        data,
        &zero,
        &vec![0.0; data.p()],
        config.newton_tol,
        config.newton_max_iter,
    )?;
    let baseline0 = Baseline::Step(index.breslow(data, &beta0, &zero)?);
    let init = EmState {
        beta: beta0,
        theta: config.theta_init,
        baseline: baseline0,
    };
    run_em(data, config, init, 1e-6, |offsets, beta| {
        let b = fit_cox_indexed(&index, data, offsets, beta, config.newton_tol, config.newton_max_iter)?;
        let step = index.breslow(data, &b, offsets)?;
        Ok((b, Baseline::Step(step)))
    })
}

/// Parametric fit with Λ0(t) = λ t^ρ.
pub fn fit_weibull(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    data.check_fittable()?;
    let zero = vec![0.0; data.n_clusters()];
    let start = weibull_regression_offset(data, &zero, None, config.newton_tol, config.newton_max_iter)?;
    let init = EmState {
        beta: start.beta.clone(),
        theta: config.theta_init,
        baseline: Baseline::weibull(start.lambda, start.rho)?,
    };
    let mut current = start;
    run_em(data, config, init, 1e-8, |offsets, _| {
        let next = weibull_regression_offset(data, offsets, Some(&current), config.newton_tol, config.newton_max_iter)?;
        let baseline = Baseline::weibull(next.lambda, next.rho)?;
        current = next;
        Ok((current.beta.clone(), baseline))
    })
}

/// Dispatch on `config.baseline_kind`.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    match config.baseline_kind {
        BaselineKind::Nonparametric => fit_semiparametric(data, config),
        BaselineKind::Weibull => fit_weibull(data, config),
    }
}

/// Standard errors of (β̂, θ̂) from the central-difference Hessian of the
/// observed log-likelihood with the baseline held at its estimate.
pub fn std_errors(fit: &FitResult, data: &Dataset) -> Result<(Vec<f64>, f64)> {
    std_errors_with(fit, data, true)
}

pub fn std_errors_with(fit: &FitResult, data: &Dataset, include_hazard_factor: bool) -> Result<(Vec<f64>, f64)> {
    check_beta(data, &fit.beta_hat)?;
    let p = fit.beta_hat.len();
    let k = p + 1;
    let mut x0 = fit.beta_hat.clone();
    x0.push(fit.theta_hat);
    let f = |x: &[f64]| -> Result<f64> {
        let frailty = WLFrailty::new(x[p])?;
        observed_loglik_with(&x[..p], &frailty, &fit.baseline_hat, data, include_hazard_factor)
    };
    let mut h: Vec<f64> = x0.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    if x0[p] - h[p] <= 0.0 {
        h[p] = 0.5 * x0[p];
    }
    let f0 = f(&x0)?;
    let mut hess = DMatrix::zeros(k, k);
    let eval = |shifts: &[(usize, f64)]| {
        let mut x = x0.clone();
        for &(i, s) in shifts {
            x[i] += s;
        }
        f(&x)
    };
    for i in 0..k {
        let up = eval(&[(i, h[i])])?;
        let dn = eval(&[(i, -h[i])])?;
        hess[(i, i)] = (up - 2.0 * f0 + dn) / (h[i] * h[i]);
        for j in 0..i {
            let pp = eval(&[(i, h[i]), (j, h[j])])?;
            let pm = eval(&[(i, h[i]), (j, -h[j])])?;
            let mp = eval(&[(i, -h[i]), (j, h[j])])?;
            let mm = eval(&[(i, -h[i]), (j, -h[j])])?;
            let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let info = -hess;
    if info.iter().any(|v| !v.is_finite()) {
        return Err(FrailtyError::NotPositiveDefinite { eigenvalue: f64::NAN });
    }
    let eig = SymmetricEigen::new(info.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eig > 0.0) {
        return Err(FrailtyError::NotPositiveDefinite { eigenvalue: min_eig });
    }
    let cov = info
        .try_inverse()
        .ok_or(FrailtyError::NotPositiveDefinite { eigenvalue: min_eig })?;
    let se: Vec<f64> = (0..k).map(|i| cov[(i, i)].sqrt()).collect();
    Ok((se[..p].to_vec(), se[p]))
}
