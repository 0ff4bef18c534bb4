//! The `wlfrailty` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use wlfrailty_core::sim::Fitter;
use wlfrailty_core::{
    fit, kendall_tau_gamma, kendall_tau_ig, kendall_tau_wl, predict_survival, BaselineKind, FitConfig, PredictionMode,
};

use crate::csv_io::{load_csv, ColumnSpec};
use crate::error::{Error, Result};
use crate::result::{read_result, write_json, write_result};
use crate::scenario::load_scenario;
use crate::simulate::simulate;

#[derive(Debug, Parser)]
#[command(
    name = "wlfrailty",
    version,
    about = "Shared weighted-Lindley frailty models for clustered survival data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dist {
    Np,
    Weibull,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TauModel {
    Wl,
    Gamma,
    Ig,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Marginal,
    Conditional,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV file.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        time: String,
        #[arg(long)]
        status: String,
        #[arg(long)]
        cluster: String,
        /// Comma-separated covariate columns.
        #[arg(long, value_delimiter = ',')]
        covars: Vec<String>,
        #[arg(long, value_enum, default_value = "np")]
        dist: Dist,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 0.5)]
        theta0: f64,
        /// Skip the standard-error computation.
        #[arg(long)]
        no_se: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation study described by a scenario file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides `replicates` in the scenario.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_enum, default_value = "np")]
        fitter: Dist,
        /// Overrides `seed` in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        no_se: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kendall's tau at a given frailty variance.
    Tau {
        #[arg(long)]
        theta: f64,
        #[arg(long, value_enum, default_value = "all")]
        model: TauModel,
    },
    /// Survival curve for a covariate profile from a saved fit.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        /// `name=value` pairs; unlisted covariates are 0.
        #[arg(long, default_value = "")]
        profile: String,
        #[arg(long, value_enum, default_value = "marginal")]
        mode: Mode,
        #[arg(long)]
        z: Option<f64>,
        /// `start:end:n`, n evenly spaced points.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Usage(format!("grid `{s}` is not start:end:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let t0: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let t1: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || t1 < t0 || t1.is_nan() || (n == 1 && t1 != t0) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![t0]);
    }
    Ok((0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect())
}

fn parse_profile(s: &str, names: &[String]) -> Result<Vec<f64>> {
    let mut x = vec![0.0; names.len()];
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("profile entry `{item}` is not name=value")))?;
        let idx = names
            .iter()
            .position(|n| n == k.trim())
            .ok_or_else(|| Error::Usage(format!("profile names unknown covariate `{}`", k.trim())))?;
        x[idx] = v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("profile value `{}` is not a number", v.trim())))?;
    }
    Ok(x)
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit {
            data,
            time,
            status,
            cluster,
            covars,
            dist,
            eps,
            max_iter,
            theta0,
            no_se,
            out,
        } => {
            let covars: Vec<&str> = covars.iter().map(String::as_str).filter(|c| !c.is_empty()).collect();
            let dataset = load_csv(&data, &ColumnSpec::new(&time, &status, &cluster, &covars))?;
            let config = FitConfig {
                baseline_kind: match dist {
                    Dist::Np => BaselineKind::Nonparametric,
                    Dist::Weibull => BaselineKind::Weibull,
                },
                eps,
                max_em_iter: max_iter,
                theta_init: theta0,
                standard_errors: !no_se,
                ..FitConfig::default()
            };
            let result = fit(&dataset, &config)?;
            write_result(&result, &out)?;
            let _ = writeln!(
                stdout,
                "theta = {:.6}, tau = {:.6}, loglik = {:.6}, {} iterations",
                result.theta_hat,
                result.kendall_tau,
                result.loglik(),
                result.n_iter
            );
        }
        Command::Simulate {
            scenario,
            reps,
            fitter,
            seed,
            max_iter,
            no_se,
            out,
        } => {
            let mut cfg = load_scenario(&scenario)?;
            if let Some(r) = reps {
                cfg.n_replicates = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            let (fitter, base) = match fitter {
                Dist::Np => (Fitter::Semiparametric, FitConfig::nonparametric()),
                Dist::Weibull => (Fitter::Weibull, FitConfig::weibull()),
            };
            let config = FitConfig {
                max_em_iter: max_iter,
                standard_errors: !no_se,
                ..base
            };
            let report = simulate(&cfg, fitter, &config)?;
            write_json(&report, &out)?;
            let _ = writeln!(stdout, "{} replicates, {} failed", report.n_replicates, report.n_failed);
        }
        Command::Tau { theta, model } => {
            let show = |name: &str, v: f64, out: &mut dyn Write| {
                let _ = writeln!(out, "{name:<5} {v:.6}");
            };
            if matches!(model, TauModel::Wl | TauModel::All) {
                show("wl", kendall_tau_wl(theta)?, stdout);
            }
            if matches!(model, TauModel::Gamma | TauModel::All) {
                show("gamma", kendall_tau_gamma(theta)?, stdout);
            }
            if matches!(model, TauModel::Ig | TauModel::All) {
                show("ig", kendall_tau_ig(theta)?, stdout);
            }
        }
        Command::Predict {
            fit,
            profile,
            mode,
            z,
            grid,
            out,
        } => {
            let report = read_result(&fit)?;
            let fitted = report.to_fit()?;
            let x = parse_profile(&profile, &fitted.covariate_names)?;
            let mode = match (mode, z) {
                (Mode::Marginal, None) => PredictionMode::Marginal,
                (Mode::Marginal, Some(_)) => return Err(Error::Usage("--z only applies to conditional mode".into())),
                (Mode::Conditional, Some(z)) => PredictionMode::Conditional(z),
                (Mode::Conditional, None) => return Err(Error::Usage("conditional mode needs --z".into())),
            };
            let curve = predict_survival(&fitted, &x, mode, &parse_grid(&grid)?)?;
            let mut text = String::from("time,survival\n");
            for (t, s) in curve.grid.iter().zip(&curve.values) {
                text.push_str(&format!("{t},{s}\n"));
            }
            std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
        }
    }
    Ok(())
}

/// Run the CLI on `args` (program name first) and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("wlfrailty").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn tau_all_orders_models() {
        let (code, out, _) = run_args(&["tau", "--theta", "0.619", "--model", "all"]);
        assert_eq!(code, 0);
        let vals: Vec<f64> = out
            .lines()
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 0.246).abs() < 5e-3);
        assert!(vals[0] > vals[1] && vals[1] > vals[2]);
    }

    #[test]
    fn usage_codes() {
        assert_eq!(run_args(&["--help"]).0, 0);
        assert_eq!(run_args(&["tau"]).0, 1);
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["tau", "--theta=-1"]).0, 2);
    }

    #[test]
    fn grid_and_profile() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("0:1").is_err() && parse_grid("1:0:3").is_err());
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(parse_profile("b=2", &names).unwrap(), vec![0.0, 2.0]);
        assert!(parse_profile("c=1", &names).is_err());
    }
}
