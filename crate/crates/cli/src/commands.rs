use std::path::Path;

use log::{info, warn};
use oedkit::design::{DesignMeasure, DesignSpace, ExactDesign, Point};
use oedkit::info::{equivalence_certificate, source_variance, Certificate, LocalModel};
use oedkit::input_design::{optimal_spectrum, synthesize_multisine, Spectrum};
use oedkit::kriging::{ego_optimize, fill_distance, fit_lengthscale, min_distance, space_fill, EgoOptions, KrigingData, KrigingModel};
use oedkit::solvers::{
    exchange_exact, fedorov_wynn, multiplicative_solve, robust_solve, RobustMode, RobustSpec, SolverOptions, SolverOutput,
    Status, StepRule, TraceRow,
};
use oedkit::RegressionModel;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{coord_names, num, nums, read_csv, read_text, OutDir};
use crate::problem::{Method, ModelSpec, ProblemSpec, Robust, Source, TaskSpec};
use crate::Outcome;

fn model(spec: &ProblemSpec) -> &ModelSpec {
    spec.model.as_ref().expect("validated problem has a model block")
}

fn space(spec: &ProblemSpec) -> Result<DesignSpace> {
    let space = model(spec).space.as_ref().expect("validated problem has a design space");
    Ok(space.design_space()?)
}

fn grid(spec: &ProblemSpec) -> Result<Vec<Point>> {
    Ok(spec.options.grid.points(&space(spec)?))
}

fn load_json<T: DeserializeOwned>(path: &str) -> Result<T> {
    let text = read_text(Path::new(path))?;
    serde_json::from_slice(&text).map_err(|e| CliError::Json { path: path.into(), source: e })
}

fn load<T: DeserializeOwned + Clone>(src: &Source<T>) -> Result<T> {
    match src {
        Source::Inline(x) => Ok(x.clone()),
        Source::File(path) => load_json(path),
    }
}

fn solver_trace(out: &OutDir, rows: &[TraceRow]) -> Result<()> {
    let header: Vec<String> =
        ["iter", "criterion_value", "max_d", "step", "support_size"].iter().map(|s| s.to_string()).collect();
    out.csv(
        "trace.csv",
        &header,
        rows.iter().map(|r| {
            vec![r.iter.to_string(), num(r.criterion_value), num(r.max_d), num(r.step), r.support_size.to_string()]
        }),
    )?;
    Ok(())
}

/// d(u, ξ) over the grid, for equivalence plots.
fn variance_plot(out: &OutDir, name: &str, grid: &[Point], d: &[f64]) -> Result<()> {
    let mut header = coord_names(grid[0].len());
    header.push("d".into());
    out.csv(
        name,
        &header,
        grid.iter().zip(d).map(|(u, d)| {
            let mut row = nums(u);
            row.push(num(*d));
            row
        }),
    )?;
    Ok(())
}

fn report(cert: &Certificate) -> Outcome {
    println!(
        "{}: max d = {} (p = {}), gap = {}, certified = {}",
        cert.criterion, cert.max_d, cert.p, cert.gap, cert.certified
    );
    if cert.certified {
        Outcome::Done
    } else {
        warn!("certificate fails: max d exceeds p + {} by {}", cert.epsilon, cert.max_d - cert.p as f64 - cert.epsilon);
        Outcome::Uncertified
    }
}

pub fn design(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Design { method, n, restarts, robust } = &spec.task else { unreachable!() };
    let m = model(spec);
    let reg = m.regression()?;
    let grid = grid(spec)?;
    let o = &spec.options;
    let mut opts = SolverOptions::new(grid.clone());
    opts.epsilon = o.epsilon;
    opts.max_iter = o.max_iter;
    opts.seed = o.seed;
    opts.merge_tol = o.merge_tol;
    opts.restarts = *restarts;
    if *method == Method::Wynn {
        opts.step = StepRule::Wynn;
    }
    let result = match (method, robust) {
        (Method::Exchange, _) => return exchange(spec, reg.as_ref(), &grid, n.expect("validated"), *restarts, out),
        (_, Some(r)) => {
            let mode = match r {
                Robust::Average { weights, .. } => RobustMode::Average(weights.clone()),
                Robust::Minimax { .. } => RobustMode::Minimax,
            };
            robust_solve(&reg, &RobustSpec { thetas: r.thetas().to_vec(), mode }, &opts)?
        }
        (Method::Multiplicative, None) => {
            let mut r = multiplicative_solve(&reg, &m.theta, &grid, o.max_iter, o.epsilon)?;
            r.measure = r.raw.merge_scaled(o.merge_tol, &opts.grid_scale()).sorted();
            r
        }
        (Method::Fedorov | Method::Wynn, None) => fedorov_wynn(&reg, &m.theta, &opts, None)?,
    };
    info!("design: {} iterations, status {:?}", result.iterations, result.status);
    out.json("measure.json", &result.measure)?;
    solver_trace(out, &result.trace)?;
    if let Some(n) = n {
        out.json("exact.json", &exact_design(&result.measure, *n)?)?;
    }
    let cert = match (&result.certificate, robust) {
        (Some(c), _) => Some(c.clone()),
        (None, None) => Some(equivalence_certificate(&reg, &m.theta, &result.raw, &grid, o.epsilon)?),
        (None, Some(_)) => None,
    };
    if o.plot && robust.is_none() {
        let d = source_variance(&LocalModel::new(&reg, &m.theta)?, &result.raw, &grid)?;
        variance_plot(out, "variance.csv", &grid, &d)?;
    }
    summary_notes(out, &result)?;
    match cert {
        Some(c) => {
            out.json("certificate.json", &c)?;
            Ok(report(&c))
        }
        None => {
            println!("{:?} after {} iterations, value {}", result.status, result.iterations, result.value);
            Ok(if result.status == Status::NoProgress { Outcome::Uncertified } else { Outcome::Done })
        }
    }
}

/// Round to `n` trials, keeping only the `n` heaviest points when the support is larger.
fn exact_design(xi: &DesignMeasure, n: usize) -> Result<ExactDesign> {
    if xi.len() <= n {
        return Ok(xi.round_to_exact(n)?);
    }
    let mut idx: Vec<usize> = (0..xi.len()).collect();
    idx.sort_by(|&a, &b| xi.weights()[b].total_cmp(&xi.weights()[a]));
    idx.truncate(n);
    idx.sort_unstable();
    info!("design: rounding drops {} light support points to fit {n} trials", xi.len() - n);
    let kept = DesignMeasure::new(
        idx.iter().map(|&i| xi.support()[i].clone()).collect(),
        idx.iter().map(|&i| xi.weights()[i]).collect(),
    )?;
    Ok(kept.round_to_exact(n)?)
}

#[derive(Serialize)]
struct DesignSummary<'a> {
    status: Status,
    iterations: usize,
    value: f64,
    notes: &'a [String],
}

fn summary_notes(out: &OutDir, r: &SolverOutput) -> Result<()> {
    out.json("summary.json", &DesignSummary { status: r.status, iterations: r.iterations, value: r.value, notes: &r.notes })?;
    Ok(())
}

#[derive(Serialize)]
struct ExchangeSummary<'a> {
    n: usize,
    log_det: f64,
    indices: &'a [usize],
    restart_values: &'a [f64],
}

fn exchange(
    spec: &ProblemSpec,
    reg: &dyn RegressionModel,
    grid: &[Point],
    n: usize,
    restarts: usize,
    out: &OutDir,
) -> Result<Outcome> {
    let theta = &model(spec).theta;
    let r = exchange_exact(&reg, theta, n, grid, restarts, spec.options.seed)?;
    out.json("exact.json", &r.design)?;
    out.json(
        "summary.json",
        &ExchangeSummary { n, log_det: r.log_det, indices: &r.indices, restart_values: &r.restart_values },
    )?;
    println!("exchange: log det = {} over {} restarts", r.log_det, r.restart_values.len());
    Ok(Outcome::Done)
}

pub fn certify(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Certify { measure } = &spec.task else { unreachable!() };
    let xi: DesignMeasure = load(measure)?;
    let m = model(spec);
    let reg = m.regression()?;
    let grid = grid(spec)?;
    let cert = equivalence_certificate(&reg, &m.theta, &xi, &grid, spec.options.epsilon)?;
    out.json("certificate.json", &cert)?;
    if spec.options.plot {
        let d = source_variance(&LocalModel::new(&reg, &m.theta)?, &xi, &grid)?;
        variance_plot(out, "variance.csv", &grid, &d)?;
    }
    Ok(report(&cert))
}

pub fn round(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Round { measure, n } = &spec.task else { unreachable!() };
    let xi: DesignMeasure = load(measure)?;
    let exact = xi.round_to_exact(*n)?;
    exact.check_within(&space(spec)?)?;
    out.json("exact.json", &exact)?;
    for (u, c) in exact.counts() {
        println!("{u:?} x {c}");
    }
    Ok(Outcome::Done)
}

pub fn input_spectrum(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::InputSpectrum { total_power } = &spec.task else { unreachable!() };
    let m = model(spec);
    let im = m.input_model()?;
    let omegas = spec.options.grid.frequencies();
    let mut opts = SolverOptions::new(Vec::new());
    opts.epsilon = spec.options.epsilon;
    opts.max_iter = spec.options.max_iter;
    opts.merge_tol = spec.options.merge_tol;
    let r = optimal_spectrum(&im, &m.theta, &omegas, *total_power, &opts)?;
    out.json("spectrum.json", &r.spectrum)?;
    out.json("certificate.json", &r.certificate)?;
    solver_trace(out, &r.solver.trace)?;
    if spec.options.plot {
        let pts: Vec<Point> = omegas.iter().map(|w| vec![*w]).collect();
        let d = source_variance(&im.at(&m.theta)?, &r.solver.raw, &pts)?;
        let header = vec!["omega".to_string(), "d".to_string()];
        out.csv("variance.csv", &header, omegas.iter().zip(&d).map(|(w, d)| vec![num(*w), num(*d)]))?;
    }
    Ok(report(&r.certificate))
}

pub fn synthesize(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Synthesize { spectrum, samples } = &spec.task else { unreachable!() };
    let s: Spectrum = load(spectrum)?;
    let u = synthesize_multisine(&s, *samples, spec.options.seed)?;
    let header = vec!["k".to_string(), "u".to_string()];
    out.csv("signal.csv", &header, u.iter().enumerate().map(|(k, x)| vec![k.to_string(), num(*x)]))?;
    let power = u.iter().map(|x| x * x).sum::<f64>() / u.len() as f64;
    println!("{} samples, mean square {power} (spectrum total {})", u.len(), s.total_power());
    Ok(Outcome::Done)
}

fn load_data(src: &Source<KrigingData>) -> Result<KrigingData> {
    match src {
        Source::File(path) if !path.ends_with(".json") => {
            let (header, rows) = read_csv(Path::new(path))?;
            if header.len() < 2 {
                return Err(CliError::Usage(format!("{path}: need coordinate columns and a final y column")));
            }
            let sites = rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect();
            let y = rows.iter().map(|r| r[r.len() - 1]).collect();
            Ok(KrigingData::new(sites, y)?)
        }
        other => load(other),
    }
}

#[derive(Serialize)]
struct KrigeSummary {
    kernel: oedkit::kriging::Kernel,
    trend: f64,
    n: usize,
}

pub fn krige(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Krige { data, predict, lengthscales } = &spec.task else { unreachable!() };
    let m = model(spec);
    let data = load_data(data)?;
    let mut kernel = m.kernel()?;
    if !lengthscales.is_empty() {
        kernel = fit_lengthscale(&kernel, &data, lengthscales)?;
        info!("krige: profile-likelihood lengthscale {}", kernel.lengthscale);
    }
    let n = data.len();
    let fitted = KrigingModel::fit(kernel, data)?;
    let at = match predict {
        Some(p) => p.clone(),
        None => grid(spec)?,
    };
    let mut header = coord_names(at[0].len());
    header.extend(["mean".to_string(), "mse".to_string()]);
    let rows = at
        .iter()
        .map(|u| {
            let p = fitted.predict(u)?;
            let mut row = nums(u);
            row.extend([num(p.mean), num(p.mse)]);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("predictions.csv", &header, rows)?;
    out.json("model.json", &KrigeSummary { kernel, trend: fitted.trend(), n })?;
    println!("{} predictions from {n} observations", at.len());
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct FillSummary {
    n: usize,
    min_distance: f64,
    fill_distance: f64,
}

pub fn spacefill(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Spacefill { n, method } = &spec.task else { unreachable!() };
    let sp = space(spec)?;
    let design = space_fill(&sp, *n, *method, None, spec.options.seed)?;
    let check = spec.options.grid.points(&sp);
    let s = FillSummary { n: *n, min_distance: min_distance(design.points()), fill_distance: fill_distance(design.points(), &check) };
    out.json("design.json", &design)?;
    out.json("summary.json", &s)?;
    println!("min distance {}, fill distance {}", s.min_distance, s.fill_distance);
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct EgoSummary {
    best_point: Point,
    best_value: f64,
    evaluations: usize,
    final_ei: Option<f64>,
}

pub fn ego(spec: &ProblemSpec, out: &OutDir) -> Result<Outcome> {
    let TaskSpec::Ego { objective, budget, n_init, ei_tol, lengthscales } = &spec.task else { unreachable!() };
    let sp = space(spec)?;
    let opts = EgoOptions {
        budget: *budget,
        ei_tol: *ei_tol,
        seed: spec.options.seed,
        kernel: model(spec).kernel()?,
        lengthscales: lengthscales.clone(),
        grid_per_dim: spec.options.grid.levels(&sp),
        n_init: *n_init,
    };
    let mut f = |u: &[f64]| objective.eval(u);
    let r = ego_optimize(&mut f, &sp, None, &opts)?;
    let mut header = vec!["iter".to_string()];
    header.extend(coord_names(sp.dim()));
    header.extend(["y".to_string(), "max_ei".to_string()]);
    out.csv(
        "trace.csv",
        &header,
        r.trace.iter().map(|row| {
            let mut cells = vec![row.iter.to_string()];
            cells.extend(nums(&row.u));
            cells.push(num(row.y));
            cells.push(row.max_ei.map(num).unwrap_or_default());
            cells
        }),
    )?;
    let s = EgoSummary { best_point: r.best_point, best_value: r.best_value, evaluations: r.trace.len(), final_ei: r.final_ei };
    out.json("result.json", &s)?;
    println!("best {:?} -> {} after {} evaluations", s.best_point, s.best_value, s.evaluations);
    Ok(Outcome::Done)
}
