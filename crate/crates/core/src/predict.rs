//! Fitted survival curves for a covariate profile.

use alloc::vec::Vec;

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::baseline::Baseline;
use crate::data::dot;
use crate::em::FitResult;
use crate::error::{FrailtyError, Result};
use crate::wl::WLFrailty;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionMode {
    /// exp(−z e^{x'β̂} Λ̂0(t)) for a fixed frailty value z.
    Conditional(f64),
    /// L(e^{x'β̂} Λ̂0(t)) at θ̂.
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: PredictionMode,
}

pub fn predict_survival(fit: &FitResult, profile: &[f64], mode: PredictionMode, grid: &[f64]) -> Result<SurvivalCurve> {
    if profile.len() != fit.beta_hat.len() {
        return Err(FrailtyError::Dimension {
            what: "covariate profile",
            expected: fit.beta_hat.len(),
            actual: profile.len(),
        });
    }
    if let Some(bad) = grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(FrailtyError::domain("prediction time", *bad));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FrailtyError::InvalidData(
            "prediction grid must be strictly increasing".into(),
        ));
    }
    if let Baseline::Step(s) = &fit.baseline_hat {
        if let Some(&t) = grid.iter().find(|&&t| t > s.last_time()) {
            return Err(FrailtyError::Extrapolation {
                time: t,
                last: s.last_time(),
            });
        }
    }
    let risk = dot(profile, &fit.beta_hat).exp();
    let values = match mode {
        PredictionMode::Conditional(z) => {
            if !(z >= 0.0) || !z.is_finite() {
                return Err(FrailtyError::domain("frailty value", z));
            }
            grid.iter()
                .map(|&t| (-z * risk * fit.baseline_hat.cumulative(t)).exp())
                .collect()
        }
        PredictionMode::Marginal => {
            let f = WLFrailty::new(fit.theta_hat)?;
            grid.iter()
                .map(|&t| f.laplace(risk * fit.baseline_hat.cumulative(t)))
                .collect()
        }
    };
    Ok(SurvivalCurve {
        grid: grid.to_vec(),
        values,
        kind: mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::StepFn;
    use crate::frailty::cluster_survival;
    use alloc::vec;

    fn fit_with(baseline: Baseline, theta: f64, beta: Vec<f64>) -> FitResult {
        FitResult {
            se_beta: vec![0.1; beta.len()],
            beta_hat: beta,
            theta_hat: theta,
            baseline_hat: baseline,
            se_theta: 0.1,
            z_hat: vec![1.0],
            kappa_hat: vec![0.0],
            loglik_trace: vec![0.0],
            n_iter: 1,
            kendall_tau: 0.2,
            cluster_ids: vec!["a".into()],
            covariate_names: vec![],
            theta_at_boundary: false,
            ascent_violations: 0,
        }
    }

    #[test]
    fn zero_frailty_is_flat() {
        let fit = fit_with(Baseline::weibull(0.5, 1.2).unwrap(), 0.6, vec![0.4]);
        let c = predict_survival(&fit, &[1.0], PredictionMode::Conditional(0.0), &[0.5, 1.0, 4.0]).unwrap();
        assert!(c.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn marginal_is_univariate_cluster_survival() {
        let b = Baseline::weibull(0.5, 1.2).unwrap();
        let fit = fit_with(b.clone(), 0.6, vec![0.0]);
        let grid = [0.3, 1.0, 2.0, 5.0];
        let c = predict_survival(&fit, &[2.0], PredictionMode::Marginal, &grid).unwrap();
        let f = WLFrailty::new(0.6).unwrap();
        for (t, v) in grid.iter().zip(&c.values) {
            let want = cluster_survival(&[*t], &[[2.0]], &[0.0], &f, &b).unwrap();
            assert!((v - want).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_lies_between_conditional_curves() {
        let fit = fit_with(Baseline::weibull(0.5, 1.2).unwrap(), 0.6, vec![0.3]);
        let grid = [0.5, 1.0, 2.0];
        let m = predict_survival(&fit, &[1.0], PredictionMode::Marginal, &grid).unwrap();
        let lo = predict_survival(&fit, &[1.0], PredictionMode::Conditional(1e-3), &grid).unwrap();
        let hi = predict_survival(&fit, &[1.0], PredictionMode::Conditional(50.0), &grid).unwrap();
        for k in 0..grid.len() {
            assert!(hi.values[k] < m.values[k] && m.values[k] < lo.values[k]);
        }
        assert!(m.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn step_baseline_does_not_extrapolate() {
        let s = StepFn::new(vec![1.0, 2.0], vec![0.2, 0.3]).unwrap();
        let fit = fit_with(Baseline::Step(s), 0.6, vec![]);
        assert!(predict_survival(&fit, &[], PredictionMode::Marginal, &[0.5, 2.0]).is_ok());
        let r = predict_survival(&fit, &[], PredictionMode::Marginal, &[0.5, 2.5]);
        assert!(matches!(r, Err(FrailtyError::Extrapolation { .. })));
        assert!(predict_survival(&fit, &[], PredictionMode::Marginal, &[1.0, 0.5]).is_err());
        assert!(predict_survival(&fit, &[1.0], PredictionMode::Marginal, &[1.0]).is_err());
    }
}
