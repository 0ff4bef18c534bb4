//! Weibull proportional-hazards regression with known per-cluster offsets:
//! the M1 step of the parametric EM.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{check_beta, dot, Dataset};
use crate::error::{FrailtyError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeibullRegression {
    pub lambda: f64,
    pub rho: f64,
    pub beta: Vec<f64>,
}

impl WeibullRegression {
    /// Exponential start: ρ = 1, β = 0 and λ = events / Σ e^{o} t.
    pub fn initial(data: &Dataset, offsets: &[f64]) -> Self {
        let exposure: f64 = data.subjects().map(|(i, s)| s.time * offsets[i].exp()).sum();
        let events = data.n_events().max(1) as f64;
        Self {
            lambda: events / exposure,
            rho: 1.0,
            beta: vec![0.0; data.p()],
        }
    }

    fn to_params(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(2 + self.beta.len());
        u.push(self.lambda.ln());
        u.push(self.rho.ln());
        u.extend_from_slice(&self.beta);
        u
    }

    fn from_params(u: &[f64]) -> Self {
        Self {
            lambda: u[0].exp(),
            rho: u[1].exp(),
            beta: u[2..].to_vec(),
        }
    }
}

/// Log-likelihood in u = (ln λ, ln ρ, β) with gradient and Hessian.
pub(crate) fn weibull_objective(data: &Dataset, offsets: &[f64], u: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let k = u.len();
    let p = k - 2;
    let (ln_lambda, ln_rho) = (u[0], u[1]);
    let rho = ln_rho.exp();
    let beta = &u[2..];
    let mut v = 0.0;
    let mut g = DVector::zeros(k);
    let mut h = DMatrix::zeros(k, k);
    for (i, s) in data.subjects() {
        let lt = s.time.ln();
        let eta = offsets[i] + dot(&s.covariates, beta);
        let mu = (eta + ln_lambda + rho * lt).exp();
        let rl = rho * lt;
        let d = if s.event { 1.0 } else { 0.0 };
        v += d * (ln_lambda + ln_rho + (rho - 1.0) * lt + eta) - mu;
        g[0] += d - mu;
        g[1] += d * (1.0 + rl) - mu * rl;
        h[(0, 0)] -= mu;
        h[(1, 0)] -= mu * rl;
        h[(1, 1)] += d * rl - mu * (rl + rl * rl);
        for a in 0..p {
            let xa = s.covariates[a];
            g[2 + a] += (d - mu) * xa;
            h[(2 + a, 0)] -= mu * xa;
            h[(2 + a, 1)] -= mu * rl * xa;
            for b in 0..=a {
                h[(2 + a, 2 + b)] -= mu * xa * s.covariates[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    (v, g, h)
}

/// Ascent direction from `-H`, with a Levenberg ridge when `-H` is not
/// positive definite.
fn damped_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let info = -h;
    if let Some(ch) = info.clone().cholesky() {
        return Some(ch.solve(g));
    }
    let mut mu = 1e-6;
    for _ in 0..30 {
        let mut damped = info.clone();
        for i in 0..damped.nrows() {
            damped[(i, i)] += mu * info[(i, i)].abs().max(1.0);
        }
        if let Some(ch) = damped.cholesky() {
            return Some(ch.solve(g));
        }
        mu *= 10.0;
    }
    None
}

/// True when a predicted increase is too small to show up in `value`.
pub(crate) fn below_resolution(gain: f64, value: f64) -> bool {
    gain.abs() <= 1e-12 * (1.0 + value.abs())
}

/// Maximize Σ δ[ln(λρt^{ρ-1}) + x'β + o] − e^{o + x'β} λ t^ρ by Newton in
/// (ln λ, ln ρ, β) until the gradient sup-norm drops below `tol`.
pub fn weibull_regression_offset(
    data: &Dataset,
    offsets: &[f64],
    init: Option<&WeibullRegression>,
    tol: f64,
    max_iter: usize,
) -> Result<WeibullRegression> {
    const WHAT: &str = "Weibull regression";
    if offsets.len() != data.n_clusters() {
        return Err(FrailtyError::Dimension {
            what: "cluster offsets",
            expected: data.n_clusters(),
            actual: offsets.len(),
        });
    }
    if let Some(bad) = offsets.iter().find(|o| !o.is_finite()) {
        return Err(FrailtyError::domain("offset", *bad));
    }
    if data.n_events() == 0 {
        return Err(FrailtyError::InvalidData("no observed failures".into()));
    }
    let start = match init {
        Some(w) => {
            check_beta(data, &w.beta)?;
            w.clone()
        }
        None => WeibullRegression::initial(data, offsets),
    };
    let mut u = start.to_params();
    let (mut v, mut g, mut h) = weibull_objective(data, offsets, &u);
    for _ in 0..max_iter {
        if g.amax() < tol {
            return Ok(WeibullRegression::from_params(&u));
        }
        let dir = damped_direction(&g, &h).ok_or(FrailtyError::SingularHessian { what: WHAT })?;
        let mut step = 1.0;
        let mut moved = false;
        let gain = g.dot(&dir);
        for _ in 0..=30 {
            let trial: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            if trial == u {
                break;
            }
            let (tv, tg, th) = weibull_objective(data, offsets, &trial);
            if tv.is_finite() && (tv > v || (below_resolution(gain, v) && tg.amax() < g.amax())) {
                u = trial;
                v = tv;
                g = tg;
                h = th;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            if g.amax() < tol.sqrt() {
                return Ok(WeibullRegression::from_params(&u));
            }
            return Err(FrailtyError::NonConvergence {
                what: WHAT,
                iterations: max_iter,
            });
        }
        if u.iter().any(|x| x.abs() > 700.0) {
            return Err(FrailtyError::SingularHessian {
                what: "Weibull regression (parameters diverge)",
            });
        }
    }
    if g.amax() < tol {
        return Ok(WeibullRegression::from_params(&u));
    }
    Err(FrailtyError::NonConvergence {
        what: WHAT,
        iterations: max_iter,
    })
}
