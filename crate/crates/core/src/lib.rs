//! Shared weighted Lindley (WL) frailty models for clustered, right-censored
//! survival data.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel simulation live in the `wlfrailty` crate.

#![no_std]
// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod association;
pub mod baseline;
pub mod cox;
pub mod data;
pub mod em;
pub mod error;
pub mod frailty;
pub mod predict;
pub mod quadrature;
pub mod sim;
pub mod special;
pub mod weibull;
pub mod wl;

pub use association::{kendall_tau_gamma, kendall_tau_ig, kendall_tau_wl, tau_report, TauReport};
pub use baseline::{Baseline, StepFn};
pub use cox::{breslow, fit_cox, partial_loglik, PartialLik, RiskIndex};
pub use data::{Cluster, Dataset, Subject};
pub use em::{
    e_step, fit, fit_semiparametric, fit_weibull, m2_maximize_theta, q2, q2_derivative, std_errors, BaselineKind,
    FitConfig, FitResult, ThetaUpdate,
};
pub use error::{FrailtyError, Result};
pub use frailty::{
    cluster_density, cluster_survival, conditional_hazard, failure_frailty_law, observed_loglik, posterior_frailty,
    survivor_frailty_law, ClusterSufficients,
};
pub use predict::{predict_survival, PredictionMode, SurvivalCurve};
pub use quadrature::{integrate_adaptive, QuadratureSpec};
pub use sim::{
    gen_dataset, recovery_study, run_replicate, summarize, weibull_from_moments, Case, Fitter, FrailtyLaw,
    MetricsSummary, ScenarioConfig, Truth, WeibullParams,
};
pub use weibull::{weibull_regression_offset, WeibullRegression};
pub use wl::{reparam, Moments, WLFrailty, WLGeneral};
