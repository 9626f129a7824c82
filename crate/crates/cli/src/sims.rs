use std::collections::BTreeMap;

use log::warn;
use oedkit::sim::{
    discriminate_sequential, median, replicate, sequential_design, simulate_lai_wei, simulate_nfc, simulate_sto, std_dev,
    Controller, Exploration, ScalarPlant, SimTrace,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{ControllerKind, LaiWeiArgs, NfcArgs, StoArgs};
use crate::error::{CliError, Result};
use crate::output::{nums, OutDir};
use crate::problem::{ProblemSpec, TaskSpec};
use crate::Outcome;

#[derive(Serialize)]
struct Run {
    seed: u64,
    trace: String,
    rows: usize,
    #[serde(rename = "final")]
    last: BTreeMap<String, f64>,
    notes: Vec<String>,
    failure: Option<String>,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

#[derive(Serialize)]
struct Summary {
    simulation: &'static str,
    parameters: Value,
    runs: Vec<Run>,
    checks: Vec<Check>,
    passed: bool,
}

pub fn seeds(first: u64, count: u64) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    Ok((first..first + count).collect())
}

fn last_row(t: &SimTrace) -> BTreeMap<String, f64> {
    match t.rows.last() {
        Some(r) => t.columns.iter().cloned().zip(r.iter().copied()).collect(),
        None => BTreeMap::new(),
    }
}

/// Write one trace per seed and the summary; a failed run is an error after the
/// partial traces are on disk.
fn finish(
    out: &OutDir,
    name: &'static str,
    parameters: Value,
    seeds: &[u64],
    traces: &[SimTrace],
    checks: Vec<Check>,
) -> Result<Outcome> {
    let mut runs = Vec::with_capacity(traces.len());
    for (seed, t) in seeds.iter().zip(traces) {
        let file = format!("trace_seed{seed}.csv");
        out.csv(&file, &t.columns, t.rows.iter().map(|r| nums(r)))?;
        runs.push(Run {
            seed: *seed,
            trace: file,
            rows: t.len(),
            last: last_row(t),
            notes: t.notes.clone(),
            failure: t.failure.as_ref().map(|e| e.to_string()),
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    out.json("summary.json", &Summary { simulation: name, parameters, runs, checks, passed })?;
    if let Some(e) = traces.iter().find_map(|t| t.failure.clone()) {
        return Err(e.into());
    }
    if !passed {
        warn!("{name}: built-in checks failed");
    }
    Ok(if passed { Outcome::Done } else { Outcome::Uncertified })
}

fn collect(results: Vec<oedkit::Result<SimTrace>>) -> Result<Vec<SimTrace>> {
    Ok(results.into_iter().collect::<oedkit::Result<Vec<_>>>()?)
}

fn pair(xs: &[f64], name: &str) -> Result<[f64; 2]> {
    <[f64; 2]>::try_from(xs).map_err(|_| CliError::Usage(format!("--{name} takes 2 values, got {}", xs.len())))
}

pub fn lai_wei(a: &LaiWeiArgs, first_seed: u64, out: &OutDir) -> Result<Outcome> {
    let theta = pair(&a.theta, "theta")?;
    let seeds = seeds(first_seed, a.seeds)?;
    let traces = collect(replicate(&seeds, |s| simulate_lai_wei(theta, a.c, a.n, a.sigma, s)))?;
    let limit = theta[1] - 1.0 / a.c;
    let slopes: Vec<f64> = traces.iter().map(|t| t.last("theta2").unwrap_or(f64::NAN)).collect();
    let intercepts: Vec<f64> = traces.iter().map(|t| t.last("theta1").unwrap_or(f64::NAN)).collect();
    let err = median(&slopes.iter().map(|s| (s - limit).abs()).collect::<Vec<_>>());
    let mut checks = vec![Check::new("slope_limit", err <= 0.05, format!("median |theta2 - {limit}| = {err} (<= 0.05)"))];
    if seeds.len() >= 2 {
        let ratio = (std_dev(&intercepts) / std_dev(&slopes)).powi(2);
        checks.push(Check::new(
            "intercept_dispersion",
            ratio >= 10.0,
            format!("var(theta1) / var(theta2) = {ratio} (>= 10)"),
        ));
    }
    let params = json!({"theta": theta, "c": a.c, "n": a.n, "sigma": a.sigma});
    finish(out, "lai-wei", params, &seeds, &traces, checks)
}

pub fn sto(a: &StoArgs, first_seed: u64, levels: Option<usize>, out: &OutDir) -> Result<Outcome> {
    let theta = <[f64; 3]>::try_from(a.theta.as_slice())
        .map_err(|_| CliError::Usage(format!("--theta takes 3 values, got {}", a.theta.len())))?;
    let levels = levels.unwrap_or(401);
    let exploration = if a.certainty_equivalence { Exploration::None } else { Exploration::LogPower(a.delta) };
    let seeds = seeds(first_seed, a.seeds)?;
    let traces =
        collect(replicate(&seeds, |s| simulate_sto(theta, a.sigma, a.n, exploration, a.lower, a.upper, levels, s)))?;
    let target = (-theta[1] / (2.0 * theta[2])).clamp(a.lower, a.upper);
    let errs: Vec<f64> = traces
        .iter()
        .map(|t| {
            let u = t.column("u");
            let start = u.len() - (u.len() / 10).max(1);
            (u[start..].iter().sum::<f64>() / (u.len() - start) as f64 - target).abs()
        })
        .collect();
    let err = median(&errs);
    let checks = vec![Check::new("optimum", err <= 0.05, format!("median |mean u over last 10% - {target}| = {err} (<= 0.05)"))];
    let params = json!({
        "theta": theta, "sigma": a.sigma, "n": a.n, "lower": a.lower, "upper": a.upper, "levels": levels,
        "delta": if a.certainty_equivalence { Value::Null } else { json!(a.delta) },
    });
    finish(out, "sto", params, &seeds, &traces, checks)
}

pub fn nfc(a: &NfcArgs, first_seed: u64, out: &OutDir) -> Result<Outcome> {
    let plant = ScalarPlant::new(a.theta, a.period, a.x0, a.sigma)?;
    let controller = match a.controller {
        ControllerKind::Nfc => Controller::Nfc,
        ControllerKind::FceEf => Controller::FceEf,
        ControllerKind::Switch => Controller::Switch { threshold: a.threshold, window: a.window },
    };
    let seeds = seeds(first_seed, a.seeds)?;
    let traces = collect(replicate(&seeds, |s| simulate_nfc(&plant, a.a, a.theta0, controller, a.n, s)))?;
    let estimate = if a.controller == ControllerKind::FceEf { "theta_tilde" } else { "theta_hat" };
    let mut checks = Vec::new();
    if a.sigma == 0.0 {
        let t = &traces[0];
        let x = t.last("x").unwrap_or(f64::NAN).abs();
        let e = (t.last(estimate).unwrap_or(f64::NAN) - a.theta).abs();
        checks.push(Check::new("regulation", x <= 1e-3, format!("|x_N| = {x} (<= 1e-3)")));
        checks.push(Check::new("estimate", e <= 0.05, format!("|{estimate} - {}| = {e} (<= 0.05)", a.theta)));
    } else {
        match a.controller {
            ControllerKind::Nfc => {
                let hits = traces
                    .iter()
                    .filter(|t| {
                        let th = t.column("theta_hat");
                        std_dev(&th[th.len() / 2..]) >= 0.05
                    })
                    .count();
                let ok = hits as f64 >= 0.8 * traces.len() as f64;
                checks.push(Check::new(
                    "dispersion",
                    ok,
                    format!("std of theta_hat over the last half >= 0.05 in {hits}/{} seeds (>= 80%)", traces.len()),
                ));
            }
            ControllerKind::FceEf => {
                let errs: Vec<f64> = traces.iter().map(|t| (t.last("theta_tilde").unwrap_or(f64::NAN) - a.theta).abs()).collect();
                let med = median(&errs);
                checks.push(Check::new("consistency", med <= 0.1, format!("median |theta_tilde - {}| = {med} (<= 0.1)", a.theta)));
            }
            ControllerKind::Switch => {
                let worst = traces
                    .iter()
                    .map(|t| t.column("mode").windows(2).filter(|w| w[0] != w[1]).count())
                    .max()
                    .unwrap_or(0);
                checks.push(Check::new("single_switch", worst <= 1, format!("at most {worst} mode changes per run (<= 1)")));
            }
        }
    }
    let params = json!({
        "theta": a.theta, "theta0": a.theta0, "a": a.a, "period": a.period, "x0": a.x0, "sigma": a.sigma, "n": a.n,
        "controller": format!("{:?}", controller),
    });
    finish(out, "nfc", params, &seeds, &traces, checks)
}

pub fn sequential(spec: &ProblemSpec, seed_count: u64, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Simulate { theta_true, n, sigma } = &spec.task else { unreachable!() };
    let m = spec.model.as_ref().expect("validated problem has a model block");
    let reg = m.regression()?;
    let space = m.space.as_ref().expect("validated problem has a design space").design_space()?;
    let grid = spec.options.grid.points(&space);
    let seeds = seeds(spec.options.seed, seed_count)?;
    let traces = collect(replicate(&seeds, |s| sequential_design(reg.as_ref(), theta_true, &m.theta, &grid, *n, *sigma, s)))?;
    let flagged: usize = traces.iter().map(|t| t.column("flag").iter().filter(|f| **f != 0.0).count()).sum();
    let checks = vec![Check::new("fits", flagged == 0, format!("{flagged} failed least-squares fits"))];
    let params = json!({"model": m.kind.name(), "theta_true": theta_true, "theta0": m.theta, "n": n, "sigma": sigma});
    finish(out, "sequential", params, &seeds, &traces, checks)
}

pub fn discriminate(spec: &ProblemSpec, seed_count: u64, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Discriminate { rival, theta_true, n, sigma } = &spec.task else { unreachable!() };
    let m = spec.model.as_ref().expect("validated problem has a model block");
    let (a, b) = (m.regression()?, rival.regression()?);
    let space = m.space.as_ref().expect("validated problem has a design space").design_space()?;
    let grid = spec.options.grid.points(&space);
    let seeds = seeds(spec.options.seed, seed_count)?;
    let traces = collect(replicate(&seeds, |s| {
        discriminate_sequential(a.as_ref(), &m.theta, b.as_ref(), &rival.theta, theta_true, &grid, *n, *sigma, s)
    }))?;
    let wins = traces
        .iter()
        .filter(|t| t.last("rss_b").unwrap_or(f64::NAN) / t.last("rss_a").unwrap_or(f64::NAN) >= 2.0)
        .count();
    let ok = wins as f64 >= 0.9 * traces.len() as f64;
    let checks = vec![Check::new(
        "prefers_true_model",
        ok,
        format!("rss(rival) / rss(true) >= 2 in {wins}/{} seeds (>= 90%)", traces.len()),
    )];
    let params = json!({
        "model": m.kind.name(), "rival": rival.kind.name(), "theta_true": theta_true, "n": n, "sigma": sigma,
    });
    finish(out, "discriminate", params, &seeds, &traces, checks)
}
