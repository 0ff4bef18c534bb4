//! Cox partial likelihood with per-cluster offsets (Breslow ties) and the
//! Breslow cumulative-hazard estimator.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::baseline::StepFn;
use crate::data::{check_beta, dot, Dataset};
use crate::error::{FrailtyError, Result};
use crate::weibull::below_resolution;

/// Coefficients beyond this size are treated as a diverging (monotone)
/// likelihood.
const DIVERGENCE_BOUND: f64 = 50.0;

/// Subjects sorted by decreasing time, with the distinct failure times
/// t_(1) < … < t_(q), their multiplicities d_(k), and for every t_(k) the
/// length of the prefix of the sorted order that forms the risk set
/// {t_ij ≥ t_(k)}.
#[derive(Debug, Clone)]
pub struct RiskIndex {
    order: Vec<usize>,
    cluster_of: Vec<usize>,
    event_times: Vec<f64>,
    multiplicity: Vec<usize>,
    risk_len: Vec<usize>,
}

/// Value, gradient and Hessian of the partial log-likelihood.
#[derive(Debug, Clone)]
pub struct PartialLik {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl RiskIndex {
    pub fn new(data: &Dataset) -> Result<Self> {
        let flat: Vec<(usize, f64, bool)> = data.subjects().map(|(i, s)| (i, s.time, s.event)).collect();
        let mut order: Vec<usize> = (0..flat.len()).collect();
        order.sort_by(|&a, &b| flat[b].1.total_cmp(&flat[a].1));

        // walk in increasing time so event times come out ascending
        let mut event_times = Vec::new();
        let mut multiplicity = Vec::new();
        let mut risk_len = Vec::new();
        let n = order.len();
        let mut pos = n;
        while pos > 0 {
            let t = flat[order[pos - 1]].1;
            let mut start = pos;
            let mut d = 0;
            while start > 0 && flat[order[start - 1]].1 == t {
                start -= 1;
                if flat[order[start]].2 {
                    d += 1;
                }
            }
            if d > 0 {
                event_times.push(t);
                multiplicity.push(d);
                risk_len.push(pos);
            }
            pos = start;
        }
        if event_times.is_empty() {
            return Err(FrailtyError::InvalidData("no observed failures".into()));
        }
        let cluster_of = flat.iter().map(|f| f.0).collect();
        Ok(Self {
            order,
            cluster_of,
            event_times,
            multiplicity,
            risk_len,
        })
    }

    /// Distinct failure times, ascending.
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    /// d_(k) for each distinct failure time.
    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicity
    }

    /// Number of subjects at risk at each t_(k).
    pub fn risk_set_sizes(&self) -> &[usize] {
        &self.risk_len
    }

    fn check_offsets(&self, data: &Dataset, offsets: &[f64]) -> Result<()> {
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
        Ok(())
    }

    /// Linear predictors η = x'β + o in descending-time order, shifted by
    /// their maximum; returns (shifted η, shift).
    fn sorted_predictors<'d>(
        &self,
        data: &'d Dataset,
        beta: &[f64],
        offsets: &[f64],
    ) -> (Vec<f64>, Vec<&'d [f64]>, Vec<bool>, f64) {
        let subjects: Vec<_> = data.subjects().map(|(_, s)| s).collect();
        let mut eta = Vec::with_capacity(self.order.len());
        let mut xs = Vec::with_capacity(self.order.len());
        let mut ev = Vec::with_capacity(self.order.len());
        for &k in &self.order {
            let s = subjects[k];
            eta.push(dot(&s.covariates, beta) + offsets[self.cluster_of[k]]);
            xs.push(s.covariates.as_slice());
            ev.push(s.event);
        }
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for e in &mut eta {
            *e -= shift;
        }
        (eta, xs, ev, shift)
    }

    pub fn partial_loglik(&self, data: &Dataset, beta: &[f64], offsets: &[f64]) -> Result<PartialLik> {
        check_beta(data, beta)?;
        self.check_offsets(data, offsets)?;
        let p = beta.len();
        let (eta, xs, ev, shift) = self.sorted_predictors(data, beta, offsets);

        let mut value = 0.0;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for (j, x) in xs.iter().enumerate() {
            if ev[j] {
                value += eta[j] + shift;
                for a in 0..p {
                    grad[a] += x[a];
                }
            }
        }

        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = DMatrix::<f64>::zeros(p, p);
        let mut filled = 0;
        // risk sets shrink as k grows, so accumulate from the last one
        for k in (0..self.event_times.len()).rev() {
            while filled < self.risk_len[k] {
                let w = eta[filled].exp();
                let x = xs[filled];
                s0 += w;
                for a in 0..p {
                    s1[a] += w * x[a];
                    for b in 0..=a {
                        s2[(a, b)] += w * x[a] * x[b];
                    }
                }
                filled += 1;
            }
            let d = self.multiplicity[k] as f64;
            value -= d * (s0.ln() + shift);
            for a in 0..p {
                let m_a = s1[a] / s0;
                grad[a] -= d * m_a;
                for b in 0..=a {
                    hess[(a, b)] -= d * (s2[(a, b)] / s0 - m_a * s1[b] / s0);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        Ok(PartialLik {
            value,
            gradient: grad,
            hessian: hess,
        })
    }

    /// Breslow jumps d_(k) / Σ_{R(t_(k))} exp(x'β + o).
    pub fn breslow(&self, data: &Dataset, beta: &[f64], offsets: &[f64]) -> Result<StepFn> {
        check_beta(data, beta)?;
        self.check_offsets(data, offsets)?;
        let (eta, _, _, shift) = self.sorted_predictors(data, beta, offsets);
        let mut inc = vec![0.0; self.event_times.len()];
        let mut s0 = 0.0;
        let mut filled = 0;
        for k in (0..self.event_times.len()).rev() {
            while filled < self.risk_len[k] {
                s0 += eta[filled].exp();
                filled += 1;
            }
            inc[k] = self.multiplicity[k] as f64 * (-shift).exp() / s0;
        }
        StepFn::new(self.event_times.clone(), inc)
    }
}

/// Partial log-likelihood with analytic gradient and Hessian.
pub fn partial_loglik(beta: &[f64], data: &Dataset, offsets: &[f64]) -> Result<PartialLik> {
    RiskIndex::new(data)?.partial_loglik(data, beta, offsets)
}

/// Newton step `(-H)^{-1} g`, or a singular-Hessian error when `-H` is not
/// numerically positive definite.
pub(crate) fn newton_direction(
    gradient: &DVector<f64>,
    hessian: &DMatrix<f64>,
    what: &'static str,
) -> Result<DVector<f64>> {
    let info = -hessian;
    let scale = info_scale(hessian);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(FrailtyError::SingularHessian { what });
    }
    let chol = info.clone().cholesky().ok_or(FrailtyError::SingularHessian { what })?;
    let l = chol.l_dirty();
    let min_pivot = (0..info.nrows())
        .map(|i| l[(i, i)] * l[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if min_pivot < 1e-12 * scale {
        return Err(FrailtyError::SingularHessian { what });
    }
    Ok(chol.solve(gradient))
}

/// Maximize the partial likelihood by Newton–Raphson with step halving.
pub fn fit_cox(data: &Dataset, offsets: &[f64], init_beta: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let index = RiskIndex::new(data)?;
    fit_cox_indexed(&index, data, offsets, init_beta, tol, max_iter)
}

pub(crate) fn fit_cox_indexed(
    index: &RiskIndex,
    data: &Dataset,
    offsets: &[f64],
    init_beta: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    const WHAT: &str = "Cox partial likelihood";
    if !(tol > 0.0) {
        return Err(FrailtyError::domain("Cox tolerance", tol));
    }
    let mut beta = init_beta.to_vec();
    if beta.is_empty() {
        check_beta(data, &beta)?;
        return Ok(beta);
    }
    let mut cur = index.partial_loglik(data, &beta, offsets)?;
    let start_scale = info_scale(&cur.hessian);
    // a likelihood that keeps rising as |β| → ∞ flattens out: the gradient
    // vanishes together with the curvature, so check the latter on exit
    let finish = |beta: Vec<f64>, cur: &PartialLik| -> Result<Vec<f64>> {
        newton_direction(&cur.gradient, &cur.hessian, WHAT)?;
        let l = (-&cur.hessian)
            .cholesky()
            .ok_or(FrailtyError::SingularHessian { what: WHAT })?;
        let l = l.l_dirty();
        let min_pivot = (0..l.nrows())
            .map(|i| l[(i, i)] * l[(i, i)])
            .fold(f64::INFINITY, f64::min);
        if min_pivot < 1e-6 * start_scale {
            return Err(FrailtyError::SingularHessian {
                what: "Cox partial likelihood (monotone likelihood)",
            });
        }
        Ok(beta)
    };
    for _ in 0..max_iter {
        if cur.gradient.amax() < tol {
            return finish(beta, &cur);
        }
        let dir = newton_direction(&cur.gradient, &cur.hessian, WHAT)?;
        let mut step = 1.0;
        let mut accepted = None;
        let gain = cur.gradient.dot(&dir);
        for _ in 0..=20 {
            let trial: Vec<f64> = beta.iter().zip(dir.iter()).map(|(b, d)| b + step * d).collect();
            if trial == beta {
                break;
            }
            let next = index.partial_loglik(data, &trial, offsets)?;
            let flat = below_resolution(gain, cur.value) && next.gradient.amax() < cur.gradient.amax();
            if next.value.is_finite() && (next.value > cur.value || flat) {
                accepted = Some((trial, next));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, next)) = accepted else {
            // no ascent left in floating point; accept if already stationary enough
            if cur.gradient.amax() < tol.sqrt() {
                return finish(beta, &cur);
            }
            return Err(FrailtyError::NonConvergence {
                what: WHAT,
                iterations: max_iter,
            });
        };
        beta = trial;
        cur = next;
        if beta.iter().any(|b| b.abs() > DIVERGENCE_BOUND) {
            return Err(FrailtyError::SingularHessian {
                what: "Cox partial likelihood (coefficients diverge)",
            });
        }
    }
    if cur.gradient.amax() < tol {
        return finish(beta, &cur);
    }
    Err(FrailtyError::NonConvergence {
        what: WHAT,
        iterations: max_iter,
    })
}

fn info_scale(hessian: &DMatrix<f64>) -> f64 {
    hessian.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Breslow estimator of Λ0 for fixed β and offsets.
pub fn breslow(beta: &[f64], offsets: &[f64], data: &Dataset) -> Result<StepFn> {
    RiskIndex::new(data)?.breslow(data, beta, offsets)
}
