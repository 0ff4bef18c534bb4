//! Parallel recovery studies and their JSON report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wlfrailty_core::sim::{self, BiasMetrics, Fitter, MetricsSummary, ReplicateOutcome, ScenarioConfig};
use wlfrailty_core::FitConfig;

use crate::error::Result;
use crate::result::nan_as_null;

/// Run every replicate on the rayon pool. Outcomes come back in replicate
/// order, so the summary does not depend on scheduling.
pub fn run_replicates(cfg: &ScenarioConfig, fitter: Fitter, fit_config: &FitConfig) -> Result<Vec<ReplicateOutcome>> {
    cfg.validate()?;
    let outcomes = (0..cfg.n_replicates as u64)
        .into_par_iter()
        .map(|i| sim::run_replicate(cfg, i, fitter, fit_config))
        .collect::<wlfrailty_core::Result<Vec<_>>>()?;
    Ok(outcomes)
}

pub fn recovery_study_parallel(cfg: &ScenarioConfig, fitter: Fitter, fit_config: &FitConfig) -> Result<MetricsSummary> {
    let outcomes = run_replicates(cfg, fitter, fit_config)?;
    Ok(sim::summarize(fitter, &outcomes)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamJson {
    pub name: String,
    pub truth: f64,
    #[serde(with = "nan_as_null")]
    pub bias: f64,
    #[serde(with = "nan_as_null")]
    pub mean_se: f64,
    #[serde(with = "nan_as_null")]
    pub rmse: f64,
    #[serde(with = "nan_as_null")]
    pub empirical_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasJson {
    pub truth: f64,
    #[serde(with = "nan_as_null")]
    pub b: f64,
    #[serde(with = "nan_as_null")]
    pub b_sd: f64,
    #[serde(with = "nan_as_null")]
    pub rb: f64,
    #[serde(with = "nan_as_null")]
    pub rb_sd: f64,
}

impl BiasJson {
    fn new(truth: f64, m: &BiasMetrics) -> Self {
        Self {
            truth,
            b: m.b,
            b_sd: m.b_sd,
            rb: m.rb,
            rb_sd: m.rb_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureJson {
    pub replicate: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// The scenario in key-value form.
    pub scenario: String,
    pub fitter: String,
    pub n_replicates: usize,
    pub n_failed: usize,
    pub failures: Vec<FailureJson>,
    pub parameters: Vec<ParamJson>,
    pub mu_w: BiasJson,
    pub xi_w: BiasJson,
    pub xi_w_missing: usize,
}

impl SimulationReport {
    pub fn new(cfg: &ScenarioConfig, outcomes: &[ReplicateOutcome], summary: &MetricsSummary) -> Self {
        Self {
            scenario: crate::scenario::format_scenario(cfg),
            fitter: summary.fitter.clone(),
            n_replicates: summary.n_replicates,
            n_failed: summary.n_failed,
            failures: outcomes
                .iter()
                .filter_map(|o| {
                    o.result.as_ref().err().map(|e| FailureJson {
                        replicate: o.index,
                        error: e.clone(),
                    })
                })
                .collect(),
            parameters: summary
                .parameters
                .iter()
                .map(|p| ParamJson {
                    name: p.name.clone(),
                    truth: p.truth,
                    bias: p.bias,
                    mean_se: p.mean_se,
                    rmse: p.rmse,
                    empirical_sd: p.empirical_sd,
                })
                .collect(),
            mu_w: BiasJson::new(summary.mu_w_truth, &summary.mu_w),
            xi_w: BiasJson::new(summary.xi_w_truth, &summary.xi_w),
            xi_w_missing: summary.xi_w_missing,
        }
    }
}

/// Run a study and package it for output.
pub fn simulate(cfg: &ScenarioConfig, fitter: Fitter, fit_config: &FitConfig) -> Result<SimulationReport> {
    let outcomes = run_replicates(cfg, fitter, fit_config)?;
    let summary = sim::summarize(fitter, &outcomes)?;
    Ok(SimulationReport::new(cfg, &outcomes, &summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use wlfrailty_core::sim::{recovery_study, Case};

    #[test]
    fn parallel_matches_sequential() {
        let cfg = ScenarioConfig {
            n_replicates: 6,
            cluster_layout: vec![(60, 3)],
            ..ScenarioConfig::case(Case::I, 0.5, (8.6, 230.0))
        };
        let fc = FitConfig {
            standard_errors: false,
            ..FitConfig::weibull()
        };
        let par = recovery_study_parallel(&cfg, Fitter::Weibull, &fc).unwrap();
        let seq = recovery_study(&cfg, Fitter::Weibull, &fc).unwrap();
        assert_eq!(format!("{par:?}"), format!("{seq:?}"));
    }
}
