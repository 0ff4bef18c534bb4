//! Simulation harness: clustered Weibull data with a shared frailty,
//! percentile censoring, and estimator-recovery summaries.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, LogNormal, Open01};

use crate::baseline::{Baseline, StepFn};
use crate::data::{Cluster, Dataset, Subject};
use crate::em::{fit_semiparametric, fit_weibull, std_errors, FitConfig, FitResult};
use crate::error::{FrailtyError, Result};
use crate::special::ln_gamma_unchecked;
use crate::wl::WLFrailty;

/// Weibull law in both parameterizations: scale form S(t) = exp(−(t/scale)^ρ)
/// and rate form Λ0(t) = λ t^ρ with λ = scale^{−ρ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams {
    pub scale: f64,
    pub rho: f64,
    pub rate_lambda: f64,
}

impl WeibullParams {
    pub fn from_rate(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(rho > 0.0) {
            return Err(FrailtyError::domain(
                "Weibull parameter",
                if lambda > 0.0 { rho } else { lambda },
            ));
        }
        Ok(Self {
            scale: lambda.powf(-1.0 / rho),
            rho,
            rate_lambda: lambda,
        })
    }

    pub fn mean(&self) -> f64 {
        self.scale * ln_gamma_unchecked(1.0 + 1.0 / self.rho).exp()
    }

    pub fn median(&self) -> f64 {
        self.scale * core::f64::consts::LN_2.powf(1.0 / self.rho)
    }

    pub fn variance(&self) -> f64 {
        let g1 = ln_gamma_unchecked(1.0 + 1.0 / self.rho).exp();
        let g2 = ln_gamma_unchecked(1.0 + 2.0 / self.rho).exp();
        self.scale * self.scale * (g2 - g1 * g1)
    }
}

/// Squared coefficient of variation of a Weibull with shape ρ.
fn weibull_cv2(rho: f64) -> f64 {
    (ln_gamma_unchecked(1.0 + 2.0 / rho) - 2.0 * ln_gamma_unchecked(1.0 + 1.0 / rho)).exp() - 1.0
}

/// Weibull law with mean `mu_w` and variance `sigma2_w`.
pub fn weibull_from_moments(mu_w: f64, sigma2_w: f64) -> Result<WeibullParams> {
    if !(mu_w > 0.0) || !mu_w.is_finite() {
        return Err(FrailtyError::domain("Weibull mean", mu_w));
    }
    if !(sigma2_w > 0.0) || !sigma2_w.is_finite() {
        return Err(FrailtyError::domain("Weibull variance", sigma2_w));
    }
    let target = sigma2_w / (mu_w * mu_w);
    // cv² falls monotonically in ρ; bisect in ln ρ
    let (mut lo, mut hi) = (0.05f64.ln(), 200f64.ln());
    if !(target < weibull_cv2(lo.exp()) && target > weibull_cv2(hi.exp())) {
        return Err(FrailtyError::NoWeibullSolution { cv2: target });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if weibull_cv2(mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let rho = (0.5 * (lo + hi)).exp();
    let scale = mu_w / ln_gamma_unchecked(1.0 + 1.0 / rho).exp();
    Ok(WeibullParams {
        scale,
        rho,
        rate_lambda: scale.powf(-rho),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrailtyLaw {
    /// Unit-mean WL with variance `ScenarioConfig::theta`.
    Wl,
    /// Uniform(0, 2), variance 1/3.
    Uniform,
    /// Gamma(1, 1), variance 1.
    Gamma,
    /// Lognormal with log-mean −ln2/2 and log-variance ln2: mean 1, variance 1.
    LogNormal,
}

impl FrailtyLaw {
    pub fn name(&self) -> &'static str {
        match self {
            FrailtyLaw::Wl => "wl",
            FrailtyLaw::Uniform => "uniform",
            FrailtyLaw::Gamma => "gamma",
            FrailtyLaw::LogNormal => "lognormal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wl" => Some(FrailtyLaw::Wl),
            "uniform" => Some(FrailtyLaw::Uniform),
            "gamma" => Some(FrailtyLaw::Gamma),
            "lognormal" => Some(FrailtyLaw::LogNormal),
            _ => None,
        }
    }

    /// Frailty variance under this law.
    pub fn variance(&self, theta: f64) -> f64 {
        match self {
            FrailtyLaw::Wl => theta,
            FrailtyLaw::Uniform => 1.0 / 3.0,
            FrailtyLaw::Gamma | FrailtyLaw::LogNormal => 1.0,
        }
    }

    fn sampler(&self, theta: f64) -> Result<FrailtySampler> {
        Ok(match self {
            FrailtyLaw::Wl => FrailtySampler::Wl(WLFrailty::new(theta)?),
            FrailtyLaw::Uniform => FrailtySampler::Uniform,
            FrailtyLaw::Gamma => FrailtySampler::Exp,
            FrailtyLaw::LogNormal => {
                let ln2 = core::f64::consts::LN_2;
                FrailtySampler::LogNormal(LogNormal::new(-0.5 * ln2, ln2.sqrt()).expect("valid lognormal"))
            }
        })
    }
}

enum FrailtySampler {
    Wl(WLFrailty),
    Uniform,
    Exp,
    LogNormal(LogNormal<f64>),
}

impl FrailtySampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FrailtySampler::Wl(f) => f.sample_one(rng),
            FrailtySampler::Uniform => {
                let u: f64 = Open01.sample(rng);
                2.0 * u
            }
            FrailtySampler::Exp => Exp1.sample(rng),
            FrailtySampler::LogNormal(d) => d.sample(rng),
        }
    }
}

/// The three cluster layouts of the recovery study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// 396 clusters, 790 subjects.
    I,
    /// 396 clusters, doubled cluster sizes.
    II,
    /// 792 clusters, doubled cluster counts.
    III,
}

impl Case {
    pub fn layout(&self) -> Vec<(usize, usize)> {
        match self {
            Case::I => vec![(200, 1), (100, 2), (50, 3), (20, 4), (20, 5), (6, 10)],
            Case::II => vec![(200, 2), (100, 4), (50, 6), (20, 8), (20, 10), (6, 20)],
            Case::III => vec![(400, 1), (200, 2), (100, 3), (40, 4), (40, 5), (12, 10)],
        }
    }
}

pub const DEFAULT_BETA: [f64; 5] = [0.3, 1.1, 0.4, -0.5, -0.3];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// (number of clusters, cluster size) pairs.
    pub cluster_layout: Vec<(usize, usize)>,
    /// Mean and variance of the baseline Weibull.
    pub weibull_moments: (f64, f64),
    pub theta: f64,
    pub frailty_law: FrailtyLaw,
    pub beta: Vec<f64>,
    /// Per-subject censoring probability.
    pub censor_q: f64,
    pub n_replicates: usize,
    pub base_seed: u64,
}

impl ScenarioConfig {
    pub fn case(case: Case, theta: f64, weibull_moments: (f64, f64)) -> Self {
        Self {
            cluster_layout: case.layout(),
            weibull_moments,
            theta,
            frailty_law: FrailtyLaw::Wl,
            beta: DEFAULT_BETA.to_vec(),
            censor_q: 0.0,
            n_replicates: 100,
            base_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_layout.is_empty() || self.cluster_layout.iter().any(|&(c, s)| c == 0 || s == 0) {
            return Err(FrailtyError::InvalidData(
                "cluster layout entries must be positive".into(),
            ));
        }
        if self.beta.len() != DEFAULT_BETA.len() {
            return Err(FrailtyError::Dimension {
                what: "scenario beta",
                expected: DEFAULT_BETA.len(),
                actual: self.beta.len(),
            });
        }
        if !(self.censor_q >= 0.0 && self.censor_q < 1.0) {
            return Err(FrailtyError::domain("censor_q", self.censor_q));
        }
        if !(self.theta > 0.0) {
            return Err(FrailtyError::domain("theta", self.theta));
        }
        if self.n_replicates == 0 {
            return Err(FrailtyError::domain("n_replicates", 0.0));
        }
        weibull_from_moments(self.weibull_moments.0, self.weibull_moments.1)?;
        Ok(())
    }

    pub fn n_clusters(&self) -> usize {
        self.cluster_layout.iter().map(|&(c, _)| c).sum()
    }

    pub fn n_subjects(&self) -> usize {
        self.cluster_layout.iter().map(|&(c, s)| c * s).sum()
    }

    pub fn covariate_names() -> Vec<String> {
        ["x11", "x12", "x2", "x3", "x4"].iter().map(|s| s.to_string()).collect()
    }
}

/// Generating values of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta: Vec<f64>,
    /// Frailty variance.
    pub theta: f64,
    pub weibull: WeibullParams,
    pub mu_w: f64,
    pub xi_w: f64,
    pub frailties: Vec<f64>,
}

/// Random stream of replicate `index`: ChaCha8 seeded with `base_seed`, on
/// stream `index`.
pub fn replicate_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// A latent failure time together with its conditional cumulative hazard
/// scale, so that S(t | z, x) = exp(−hazard_scale · t^ρ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectDraw {
    pub time: f64,
    pub hazard_scale: f64,
    pub rho: f64,
}

/// The time C with P(T > C) = q under the subject's conditional Weibull.
pub fn censor_time(q: f64, hazard_scale: f64, rho: f64) -> f64 {
    if q <= 0.0 {
        f64::INFINITY
    } else {
        (-q.ln() / hazard_scale).powf(1.0 / rho)
    }
}

/// Observed (time, event) pairs under percentile censoring.
pub fn censor_times(draws: &[SubjectDraw], q: f64) -> Result<Vec<(f64, bool)>> {
    if !(0.0..1.0).contains(&q) {
        return Err(FrailtyError::domain("censor_q", q));
    }
    Ok(draws
        .iter()
        .map(|d| {
            let c = censor_time(q, d.hazard_scale, d.rho);
            if d.time <= c {
                (d.time, true)
            } else {
                (c, false)
            }
        })
        .collect())
}

/// Draw replicate `index` of the scenario.
pub fn gen_dataset(cfg: &ScenarioConfig, index: u64) -> Result<(Dataset, Truth)> {
    cfg.validate()?;
    let w = weibull_from_moments(cfg.weibull_moments.0, cfg.weibull_moments.1)?;
    let sampler = cfg.frailty_law.sampler(cfg.theta)?;
    let mut rng = replicate_rng(cfg.base_seed, index);
    let mut clusters = Vec::with_capacity(cfg.n_clusters());
    let mut frailties = Vec::with_capacity(cfg.n_clusters());
    for &(count, size) in &cfg.cluster_layout {
        for _ in 0..count {
            let z = sampler.draw(&mut rng);
            frailties.push(z);
            let mut covariates = Vec::with_capacity(size);
            let mut draws = Vec::with_capacity(size);
            for _ in 0..size {
                let x = draw_covariates(&mut rng);
                let lp: f64 = x.iter().zip(&cfg.beta).map(|(a, b)| a * b).sum();
                let hazard_scale = z * lp.exp() * w.rate_lambda;
                let u: f64 = Open01.sample(&mut rng);
                draws.push(SubjectDraw {
                    time: (-u.ln() / hazard_scale).powf(1.0 / w.rho),
                    hazard_scale,
                    rho: w.rho,
                });
                covariates.push(x);
            }
            let observed = censor_times(&draws, cfg.censor_q)?;
            let subjects = observed
                .into_iter()
                .zip(covariates)
                .map(|((t, e), x)| Subject::new(t.max(f64::MIN_POSITIVE), e, x))
                .collect::<Result<Vec<_>>>()?;
            clusters.push(Cluster::new(alloc::format!("{}", clusters.len() + 1), subjects)?);
        }
    }
    let data = Dataset::new(clusters)?.with_covariate_names(ScenarioConfig::covariate_names())?;
    let truth = Truth {
        beta: cfg.beta.clone(),
        theta: cfg.frailty_law.variance(cfg.theta),
        mu_w: w.mean(),
        xi_w: w.median(),
        weibull: w,
        frailties,
    };
    Ok((data, truth))
}

fn draw_covariates<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let level: f64 = rng.random();
    let (x11, x12) = if level < 0.4 {
        (0.0, 0.0)
    } else if level < 0.8 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let bern = |rng: &mut R, p: f64| if rng.random::<f64>() < p { 1.0 } else { 0.0 };
    let x2 = bern(rng, 0.7);
    let x3 = bern(rng, 0.6);
    let x4 = bern(rng, 0.5);
    vec![x11, x12, x2, x3, x4]
}

/// Area under the step survival curve Ŝ0 = exp(−Λ̂0) up to the last jump.
pub fn baseline_mean_estimate(step: &StepFn) -> f64 {
    let t = step.times();
    let s = step.survival_values();
    let mut area = t[0];
    for j in 0..t.len() - 1 {
        area += (t[j + 1] - t[j]) * s[j];
    }
    area
}

/// Time at which Ŝ0, linearly interpolated between jump points (with (0, 1)
/// prepended), crosses 1/2.
pub fn baseline_median_estimate(step: &StepFn) -> Result<f64> {
    let s = step.survival_values();
    let mut prev = (0.0, 1.0);
    for (&t, &v) in step.times().iter().zip(&s) {
        if v <= 0.5 {
            let (t0, v0) = prev;
            if v0 == v {
                return Ok(t);
            }
            return Ok(t0 + (v0 - 0.5) / (v0 - v) * (t - t0));
        }
        prev = (t, v);
    }
    Err(FrailtyError::NoMedianCrossing { min_survival: prev.1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasMetrics {
    pub b: f64,
    pub b_sd: f64,
    pub rb: f64,
    pub rb_sd: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Bias and relative bias with the sample SDs of their error sequences.
pub fn baseline_bias_metrics(estimates: &[f64], truth: f64) -> Result<BiasMetrics> {
    if estimates.len() < 2 {
        return Err(FrailtyError::InvalidData(
            "bias metrics need at least two estimates".into(),
        ));
    }
    if truth == 0.0 {
        return Err(FrailtyError::domain("relative-bias truth", truth));
    }
    let err: Vec<f64> = estimates.iter().map(|e| e - truth).collect();
    let rel: Vec<f64> = err.iter().map(|e| e / truth).collect();
    let (b, b_sd) = mean_sd(&err);
    let (rb, rb_sd) = mean_sd(&rel);
    Ok(BiasMetrics { b, b_sd, rb, rb_sd })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fitter {
    Semiparametric,
    Weibull,
    /// Evaluate at the generating values without optimizing.
    FixedTruth,
}

impl Fitter {
    pub fn name(&self) -> &'static str {
        match self {
            Fitter::Semiparametric => "np",
            Fitter::Weibull => "weibull",
            Fitter::FixedTruth => "truth",
        }
    }
}

/// Estimates from one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateEstimates {
    pub beta: Vec<f64>,
    pub theta: f64,
    pub se_beta: Vec<f64>,
    pub se_theta: f64,
    /// (λ̂, ρ̂) for parametric baselines.
    pub weibull: Option<(f64, f64)>,
    pub mu_w: f64,
    /// NaN when the estimated baseline survival never reaches 1/2.
    pub xi_w: f64,
    pub n_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: u64,
    pub truth: Truth,
    pub result: core::result::Result<ReplicateEstimates, String>,
}

fn baseline_summaries(b: &Baseline) -> (f64, f64) {
    match b {
        Baseline::Step(s) => (
            baseline_mean_estimate(s),
            baseline_median_estimate(s).unwrap_or(f64::NAN),
        ),
        Baseline::Weibull { lambda, rho } => {
            let w = WeibullParams::from_rate(*lambda, *rho).expect("fitted Weibull parameters are positive");
            (w.mean(), w.median())
        }
    }
}

fn estimates_from(fit: &FitResult) -> ReplicateEstimates {
    let (mu_w, xi_w) = baseline_summaries(&fit.baseline_hat);
    ReplicateEstimates {
        beta: fit.beta_hat.clone(),
        theta: fit.theta_hat,
        se_beta: fit.se_beta.clone(),
        se_theta: fit.se_theta,
        weibull: match fit.baseline_hat {
            Baseline::Weibull { lambda, rho } => Some((lambda, rho)),
            Baseline::Step(_) => None,
        },
        mu_w,
        xi_w,
        n_iter: fit.n_iter,
    }
}

fn fixed_truth_estimates(data: &Dataset, truth: &Truth) -> Result<ReplicateEstimates> {
    let baseline = Baseline::weibull(truth.weibull.rate_lambda, truth.weibull.rho)?;
    let probe = FitResult {
        beta_hat: truth.beta.clone(),
        theta_hat: truth.theta,
        baseline_hat: baseline.clone(),
        se_beta: vec![],
        se_theta: f64::NAN,
        z_hat: vec![],
        kappa_hat: vec![],
        loglik_trace: vec![],
        n_iter: 0,
        kendall_tau: f64::NAN,
        cluster_ids: vec![],
        covariate_names: vec![],
        theta_at_boundary: false,
        ascent_violations: 0,
    };
    let (se_beta, se_theta) = std_errors(&probe, data)?;
    Ok(ReplicateEstimates {
        beta: truth.beta.clone(),
        theta: truth.theta,
        se_beta,
        se_theta,
        weibull: Some((truth.weibull.rate_lambda, truth.weibull.rho)),
        mu_w: truth.mu_w,
        xi_w: truth.xi_w,
        n_iter: 0,
    })
}

/// Generate and fit replicate `index`; fitting errors are captured in the
/// outcome, generation errors are returned.
pub fn run_replicate(
    cfg: &ScenarioConfig,
    index: u64,
    fitter: Fitter,
    fit_config: &FitConfig,
) -> Result<ReplicateOutcome> {
    let (data, truth) = gen_dataset(cfg, index)?;
    let result = match fitter {
        Fitter::Semiparametric => fit_semiparametric(&data, fit_config).map(|f| estimates_from(&f)),
        Fitter::Weibull => fit_weibull(&data, fit_config).map(|f| estimates_from(&f)),
        Fitter::FixedTruth => fixed_truth_estimates(&data, &truth),
    };
    if let Err(e) = &result {
        log::warn!("replicate {index} failed: {e}");
    }
    Ok(ReplicateOutcome {
        index,
        truth,
        result: result.map_err(|e| e.to_string()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    /// Mean of the estimated standard errors (NaN when not available).
    pub mean_se: f64,
    pub rmse: f64,
    /// Sample SD of the estimates.
    pub empirical_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub fitter: String,
    pub n_replicates: usize,
    pub n_failed: usize,
    pub parameters: Vec<ParamSummary>,
    pub mu_w_truth: f64,
    pub mu_w: BiasMetrics,
    pub xi_w_truth: f64,
    pub xi_w: BiasMetrics,
    /// Replicates without a median crossing, excluded from `xi_w`.
    pub xi_w_missing: usize,
}

impl MetricsSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParamSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

fn param_summary(name: String, truth: f64, est: &[f64], se: &[f64]) -> ParamSummary {
    let n = est.len() as f64;
    let bias = est.iter().map(|e| e - truth).sum::<f64>() / n;
    let rmse = (est.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / n).sqrt();
    let finite_se: Vec<f64> = se.iter().copied().filter(|s| s.is_finite()).collect();
    let mean_se = if finite_se.is_empty() {
        f64::NAN
    } else {
        finite_se.iter().sum::<f64>() / finite_se.len() as f64
    };
    ParamSummary {
        name,
        truth,
        bias,
        mean_se,
        rmse,
        empirical_sd: mean_sd(est).1,
    }
}

/// Aggregate replicate outcomes (in index order). Fails when more than 20%
/// of the replicates failed.
pub fn summarize(fitter: Fitter, outcomes: &[ReplicateOutcome]) -> Result<MetricsSummary> {
    let total = outcomes.len();
    let ok: Vec<(&Truth, &ReplicateEstimates)> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(|e| (&o.truth, e)))
        .collect();
    let failed = total - ok.len();
    if total == 0 || failed * 5 > total || ok.len() < 2 {
        return Err(FrailtyError::TooManyFailures { failed, total });
    }
    let first = ok[0].0;
    let names = ScenarioConfig::covariate_names();
    let mut parameters = Vec::new();
    for (k, name) in names.iter().enumerate().take(first.beta.len()) {
        let est: Vec<f64> = ok.iter().map(|(_, e)| e.beta[k]).collect();
        let se: Vec<f64> = ok
            .iter()
            .map(|(_, e)| e.se_beta.get(k).copied().unwrap_or(f64::NAN))
            .collect();
        parameters.push(param_summary(name.clone(), first.beta[k], &est, &se));
    }
    let est: Vec<f64> = ok.iter().map(|(_, e)| e.theta).collect();
    let se: Vec<f64> = ok.iter().map(|(_, e)| e.se_theta).collect();
    parameters.push(param_summary("theta".into(), first.theta, &est, &se));
    if fitter != Fitter::Semiparametric {
        let lam: Vec<f64> = ok.iter().filter_map(|(_, e)| e.weibull.map(|w| w.0)).collect();
        let rho: Vec<f64> = ok.iter().filter_map(|(_, e)| e.weibull.map(|w| w.1)).collect();
        if lam.len() == ok.len() {
            parameters.push(param_summary("lambda".into(), first.weibull.rate_lambda, &lam, &[]));
            parameters.push(param_summary("rho".into(), first.weibull.rho, &rho, &[]));
        }
    }
    let mu: Vec<f64> = ok.iter().map(|(_, e)| e.mu_w).collect();
    let xi: Vec<f64> = ok.iter().map(|(_, e)| e.xi_w).filter(|v| v.is_finite()).collect();
    let xi_missing = ok.len() - xi.len();
    let nan = BiasMetrics {
        b: f64::NAN,
        b_sd: f64::NAN,
        rb: f64::NAN,
        rb_sd: f64::NAN,
    };
    Ok(MetricsSummary {
        fitter: fitter.name().into(),
        n_replicates: total,
        n_failed: failed,
        parameters,
        mu_w_truth: first.mu_w,
        mu_w: baseline_bias_metrics(&mu, first.mu_w)?,
        xi_w_truth: first.xi_w,
        xi_w: baseline_bias_metrics(&xi, first.xi_w).unwrap_or(nan),
        xi_w_missing: xi_missing,
    })
}

/// Run every replicate sequentially and summarize.
pub fn recovery_study(cfg: &ScenarioConfig, fitter: Fitter, fit_config: &FitConfig) -> Result<MetricsSummary> {
    cfg.validate()?;
    let outcomes = (0..cfg.n_replicates as u64)
        .map(|i| run_replicate(cfg, i, fitter, fit_config))
        .collect::<Result<Vec<_>>>()?;
    summarize(fitter, &outcomes)
}
