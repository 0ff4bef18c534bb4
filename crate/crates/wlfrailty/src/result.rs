//! JSON form of a fitted model.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wlfrailty_core::{Baseline, FitResult, StepFn};

use crate::error::{Error, Result};

/// Serialize non-finite floats as `null` and read `null` back as NaN.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    #[serde(with = "nan_as_null")]
    pub se: f64,
    #[serde(with = "nan_as_null")]
    pub z: f64,
    #[serde(with = "nan_as_null")]
    pub p: f64,
}

impl Coefficient {
    pub fn new(name: impl Into<String>, estimate: f64, se: f64) -> Self {
        let z = estimate / se;
        Self {
            name: name.into(),
            estimate,
            se,
            z,
            p: p_value(z),
        }
    }

    pub fn significant(&self, level: f64) -> bool {
        self.p < level
    }
}

/// Two-sided standard normal p-value.
pub fn p_value(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub estimate: f64,
    #[serde(with = "nan_as_null")]
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineJson {
    Weibull { lambda: f64, rho: f64 },
    Step { times: Vec<f64>, increments: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrailtyEstimate {
    pub cluster_id: String,
    pub z_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub coefficients: Vec<Coefficient>,
    pub theta: ThetaEstimate,
    pub kendall_tau: f64,
    pub baseline: BaselineJson,
    pub frailties: Vec<FrailtyEstimate>,
    pub loglik: f64,
    pub n_iter: usize,
}

impl FitReport {
    pub fn from_fit(fit: &FitResult) -> Self {
        let coefficients = fit
            .covariate_names
            .iter()
            .zip(&fit.beta_hat)
            .enumerate()
            .map(|(k, (n, b))| Coefficient::new(n.clone(), *b, fit.se_beta.get(k).copied().unwrap_or(f64::NAN)))
            .collect();
        let baseline = match &fit.baseline_hat {
            Baseline::Weibull { lambda, rho } => BaselineJson::Weibull {
                lambda: *lambda,
                rho: *rho,
            },
            Baseline::Step(s) => BaselineJson::Step {
                times: s.times().to_vec(),
                increments: s.increments().to_vec(),
            },
        };
        Self {
            coefficients,
            theta: ThetaEstimate {
                estimate: fit.theta_hat,
                se: fit.se_theta,
            },
            kendall_tau: fit.kendall_tau,
            baseline,
            frailties: fit
                .cluster_ids
                .iter()
                .zip(&fit.z_hat)
                .map(|(id, z)| FrailtyEstimate {
                    cluster_id: id.clone(),
                    z_hat: *z,
                })
                .collect(),
            loglik: fit.loglik(),
            n_iter: fit.n_iter,
        }
    }

    pub fn baseline(&self) -> Result<Baseline> {
        Ok(match &self.baseline {
            BaselineJson::Weibull { lambda, rho } => Baseline::weibull(*lambda, *rho)?,
            BaselineJson::Step { times, increments } => Baseline::Step(StepFn::new(times.clone(), increments.clone())?),
        })
    }

    /// Rebuild the parts of a [`FitResult`] needed for prediction. The
    /// log-likelihood trace holds only the final value and κ̂ is not stored.
    pub fn to_fit(&self) -> Result<FitResult> {
        Ok(FitResult {
            beta_hat: self.coefficients.iter().map(|c| c.estimate).collect(),
            theta_hat: self.theta.estimate,
            baseline_hat: self.baseline()?,
            se_beta: self.coefficients.iter().map(|c| c.se).collect(),
            se_theta: self.theta.se,
            z_hat: self.frailties.iter().map(|f| f.z_hat).collect(),
            kappa_hat: vec![f64::NAN; self.frailties.len()],
            loglik_trace: vec![self.loglik],
            n_iter: self.n_iter,
            kendall_tau: self.kendall_tau,
            cluster_ids: self.frailties.iter().map(|f| f.cluster_id.clone()).collect(),
            covariate_names: self.coefficients.iter().map(|c| c.name.clone()).collect(),
            theta_at_boundary: false,
            ascent_violations: 0,
        })
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_result(fit: &FitResult, path: impl AsRef<Path>) -> Result<()> {
    write_json(&FitReport::from_fit(fit), path)
}

pub fn read_result(path: impl AsRef<Path>) -> Result<FitReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_values() {
        assert_eq!(p_value(0.0), 1.0);
        assert!((p_value(1.959_963_984_540_054) - 0.05).abs() < 1e-12);
        assert!((p_value(-3.0) - 0.002_699_796_063_260_2).abs() < 1e-15);
        assert!(p_value(f64::NAN).is_nan());
    }

    #[test]
    fn significance_markers() {
        assert!(Coefficient::new("dukesC", 0.308, 0.121).significant(0.05));
        assert!(!Coefficient::new("sexMale", 0.152, 0.118).significant(0.05));
        assert_eq!(Coefficient::new("zero", 0.0, 1.0).p, 1.0);
    }

    #[test]
    fn nan_se_survives_json() {
        let c = Coefficient::new("x", 0.5, f64::NAN);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"se\":null"));
        let back: Coefficient = serde_json::from_str(&s).unwrap();
        assert!(back.se.is_nan() && back.estimate == 0.5);
    }
}
