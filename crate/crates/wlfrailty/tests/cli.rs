use std::path::Path;
use std::process::Command;

use wlfrailty::{dump_csv, read_result, FitReport};
use wlfrailty_core::sim::{gen_dataset, Case, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wlfrailty"))
}

fn write_case1_csv(dir: &Path, n_clusters: usize) -> std::path::PathBuf {
    let mut cfg = ScenarioConfig::case(Case::I, 0.5, (8.6, 230.0));
    cfg.cluster_layout = vec![(n_clusters / 2, 1), (n_clusters - n_clusters / 2, 3)];
    cfg.censor_q = 0.1;
    let (data, _) = gen_dataset(&cfg, 0).unwrap();
    let path = dir.join("case1.csv");
    dump_csv(&data, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

fn fit_args(csv: &Path, out: &Path, dist: &str) -> Vec<String> {
    [
        "fit",
        "--data",
        csv.to_str().unwrap(),
        "--time",
        "time",
        "--status",
        "status",
        "--cluster",
        "cluster",
        "--covars",
        "x11,x12,x2,x3,x4",
        "--dist",
        dist,
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn fit_writes_schema_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_case1_csv(dir.path(), 120);
    for dist in ["np", "weibull"] {
        let out = dir.path().join(format!("fit_{dist}.json"));
        let status = bin().args(fit_args(&csv, &out, dist)).output().unwrap().status;
        assert_eq!(status.code(), Some(0), "{dist}");
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        for key in [
            "coefficients",
            "theta",
            "kendall_tau",
            "baseline",
            "frailties",
            "loglik",
            "n_iter",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        let coef = &value["coefficients"][0];
        for key in ["name", "estimate", "se", "z", "p"] {
            assert!(coef.get(key).is_some());
        }
        assert_eq!(value["frailties"].as_array().unwrap().len(), 120);
        assert_eq!(value["baseline"]["kind"], if dist == "np" { "step" } else { "weibull" });
        let report = read_result(&out).unwrap();
        let text = serde_json::to_string_pretty(&report).unwrap();
        let again: FitReport = serde_json::from_str(&text).unwrap();
        assert_eq!(again, report);
    }
}

#[test]
fn conditional_zero_frailty_predicts_ones() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_case1_csv(dir.path(), 80);
    let fit = dir.path().join("fit.json");
    assert_eq!(
        bin()
            .args(fit_args(&csv, &fit, "weibull"))
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    let curve = dir.path().join("curve.csv");
    let status = bin()
        .args([
            "predict",
            "--fit",
            fit.to_str().unwrap(),
            "--profile",
            "x2=1,x4=1",
            "--mode",
            "conditional",
        ])
        .args(["--z", "0", "--grid", "0.5:20:9", "--out", curve.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&curve).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 9);
    assert!(values.iter().all(|v| *v == 1.0));

    let marginal = dir.path().join("marginal.csv");
    let status = bin()
        .args([
            "predict",
            "--fit",
            fit.to_str().unwrap(),
            "--grid",
            "0.5:20:9",
            "--out",
            marginal.to_str().unwrap(),
        ])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().args(["fit", "--data"]).output().unwrap().status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,time,status\n1,1,1\n1,2,2\n").unwrap();
    let out = bin()
        .args([
            "fit",
            "--data",
            bad.to_str().unwrap(),
            "--time",
            "time",
            "--status",
            "status",
            "--cluster",
            "id",
        ])
        .args(["--covars", "", "--out", dir.path().join("r.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let csv = write_case1_csv(dir.path(), 120);
    let out = dir.path().join("r.json");
    let mut args = fit_args(&csv, &out, "np");
    args.extend(["--max-iter".into(), "1".into()]);
    assert_eq!(bin().args(args).output().unwrap().status.code(), Some(3));
}

#[test]
fn simulate_reports_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.txt");
    std::fs::write(
        &scenario,
        "layout = 40x2, 20x4\ntheta = 0.5\nreplicates = 4\nseed = 3\n",
    )
    .unwrap();
    let out = dir.path().join("sim.json");
    let status = bin()
        .args([
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--fitter",
            "weibull",
            "--no-se",
        ])
        .args(["--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let report: wlfrailty::SimulationReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.n_replicates, 4);
    assert!(report.parameters.iter().any(|p| p.name == "theta"));
    assert!(report.parameters.iter().any(|p| p.name == "rho"));
}

#[test]
fn simulate_twice_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.txt");
    std::fs::write(&scenario, "layout = 30x2, 10x4\ntheta = 0.3\ncensor_q = 0.2\n").unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = bin()
            .args([
                "simulate",
                "--scenario",
                scenario.to_str().unwrap(),
                "--reps",
                "5",
                "--seed",
                "11",
            ])
            .args(["--max-iter", "5000", "--out", out.to_str().unwrap()])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}
