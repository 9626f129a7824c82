//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use oedkit::design::{arange, linspace, tensor_grid, DesignMeasure, ExactDesign, Point};
use oedkit::info::{asymptotic_covariance, equivalence_certificate, info_matrix_exact, variance_function};
use oedkit::input_design::{freq_info_matrix, optimal_spectrum, spectrum_info, InputModel, RationalTF};
use oedkit::kriging::{ego_optimize, ei_from_prediction, EgoOptions, Kernel, KernelFamily, KrigingData, KrigingModel, Prediction};
use oedkit::models::{
    finite_difference_sensitivity, hadamard_design, CompartmentModel, ExponentialDecay, LinearModel, RegressionModel,
};
use oedkit::sim::{ef_estimate, median, replicate, simulate_lai_wei, simulate_nfc, std_dev, Controller, ScalarPlant};
use oedkit::solvers::{exchange_exact, fedorov_wynn, multiplicative_solve, SolverOptions, SolverOutput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;
type Draw<'a> = &'a mut dyn FnMut(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn line(a: f64, b: f64, n: usize) -> Vec<Point> {
    linspace(a, b, n).into_iter().map(|x| vec![x]).collect()
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t <= limit { Ok(()) } else { Err(format!("took {:.1?} (limit {:?})", t, limit)) }
}

fn weighing_gain() -> Outcome {
    let start = Instant::now();
    let model = LinearModel::identity(8);
    let theta = [0.0; 8];
    let m = info_matrix_exact(&model, &theta, &hadamard_design(8).unwrap()).unwrap();
    let dev = (m.matrix() - DMatrix::<f64>::identity(8, 8)).amax();
    ensure!(dev <= 1e-12, "M − I₈ = {dev:e}");
    let cov = asymptotic_covariance(&m, 1.0, 8).unwrap();
    let single = ExactDesign::new((0..8).map(|i| (0..8).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).unwrap();
    let cov1 = asymptotic_covariance(&info_matrix_exact(&model, &theta, &single).unwrap(), 1.0, 8).unwrap();
    for i in 0..8 {
        ensure!((cov[(i, i)] - 0.125).abs() <= 1e-12, "Hadamard variance {}", cov[(i, i)]);
        ensure!((cov1[(i, i)] - 1.0).abs() <= 1e-12, "one-at-a-time variance {}", cov1[(i, i)]);
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!("variances σ²/8 vs σ², {:.1?}", start.elapsed()))
}

fn pk_grid() -> Vec<Point> {
    arange(1.0, 720.0, 1.0).into_iter().map(|x| vec![x]).collect()
}

fn pk_solve() -> SolverOutput {
    let mut opts = SolverOptions::new(pk_grid());
    opts.epsilon = 1e-3;
    fedorov_wynn(&CompartmentModel::standard(), &CompartmentModel::NOMINAL_THETA, &opts, None).unwrap()
}

fn pk_schedule() -> Outcome {
    let start = Instant::now();
    let out = pk_solve();
    let merged = out.raw.merge_support(2.0).sorted();
    ensure!(merged.len() == 4, "{} merged support points", merged.len());
    for ((u, w), target) in merged.iter().zip([1.0, 10.0, 74.0, 720.0]) {
        ensure!((u[0] - target).abs() <= 5.0, "point {} vs {target}", u[0]);
        ensure!((w - 0.25).abs() <= 0.02, "weight {w} at {}", u[0]);
    }
    let cert = equivalence_certificate(
        &CompartmentModel::standard(),
        &CompartmentModel::NOMINAL_THETA,
        &merged,
        &pk_grid(),
        0.02,
    )
    .unwrap();
    ensure!(cert.certified, "max d {}", cert.max_d);
    within(Duration::from_secs(60), start)?;
    let pts: Vec<String> = merged.iter().map(|(u, w)| format!("{:.1}:{:.3}", u[0], w)).collect();
    Ok(format!("{} max d {:.4}, {:.1?}", pts.join(" "), cert.max_d, start.elapsed()))
}

struct Run {
    name: &'static str,
    model: Box<dyn RegressionModel>,
    theta: Vec<f64>,
    grid: Vec<Point>,
    eps: f64,
}

fn certified_runs() -> Vec<Run> {
    vec![
        Run { name: "line", model: Box::new(LinearModel::polynomial(1)), theta: vec![0.0; 2], grid: line(-1.0, 1.0, 41), eps: 1e-4 },
        Run { name: "quadratic", model: Box::new(LinearModel::polynomial(2)), theta: vec![0.0; 3], grid: line(-1.0, 1.0, 41), eps: 1e-4 },
        Run { name: "cubic", model: Box::new(LinearModel::polynomial(3)), theta: vec![0.0; 4], grid: line(-1.0, 1.0, 101), eps: 1e-4 },
        Run { name: "exponential", model: Box::new(ExponentialDecay), theta: vec![0.5], grid: line(0.0, 10.0, 201), eps: 1e-4 },
        Run {
            name: "two-factor",
            model: Box::new(LinearModel::custom(3, 2, |u| vec![1.0, u[0], u[1]])),
            theta: vec![0.0; 3],
            grid: tensor_grid(&[linspace(-1.0, 1.0, 11), linspace(-1.0, 1.0, 11)]),
            eps: 1e-4,
        },
        Run {
            name: "pk",
            model: Box::new(CompartmentModel::standard()),
            theta: CompartmentModel::NOMINAL_THETA.to_vec(),
            grid: pk_grid(),
            eps: 1e-3,
        },
    ]
}

fn solve(run: &Run) -> SolverOutput {
    let mut opts = SolverOptions::new(run.grid.clone());
    opts.epsilon = run.eps;
    fedorov_wynn(&run.model, &run.theta, &opts, None).unwrap()
}

/// Largest rise of d from `u` to a grid neighbour one step away in each coordinate.
fn grid_slack(run: &Run, xi: &DesignMeasure, u: &[f64], d: f64) -> f64 {
    let spacing: Vec<f64> = (0..u.len())
        .map(|j| {
            let mut xs: Vec<f64> = run.grid.iter().map(|g| g[j]).collect();
            xs.sort_by(f64::total_cmp);
            xs.windows(2).map(|w| w[1] - w[0]).filter(|h| *h > 0.0).fold(f64::INFINITY, f64::min)
        })
        .collect();
    run.grid
        .iter()
        .filter(|g| g.iter().zip(u).zip(&spacing).all(|((a, b), h)| (a - b).abs() <= 1.0001 * h))
        .map(|g| variance_function(&run.model, &run.theta, xi, g).unwrap() - d)
        .fold(0.0, f64::max)
}

fn equivalence_invariant() -> Outcome {
    let runs = certified_runs();
    let mut worst: f64 = 0.0;
    for run in &runs {
        let out = solve(run);
        ensure!(out.certified(), "{} not certified", run.name);
        let p = run.model.n_params() as f64;
        let cert = equivalence_certificate(&run.model, &run.theta, &out.raw, &run.grid, run.eps).unwrap();
        for (u, d) in out.raw.support().iter().zip(&cert.support_d) {
            let slack = grid_slack(run, &out.raw, u, *d);
            ensure!((d - p).abs() <= run.eps + slack, "{}: d = {d} at {u:?} (slack {slack:e})", run.name);
        }
        let integral: f64 =
            out.raw.iter().map(|(u, w)| w * variance_function(&run.model, &run.theta, &out.raw, u).unwrap()).sum();
        ensure!((integral - p).abs() <= 1e-10, "{}: ∫d dξ = {integral}", run.name);
        worst = worst.max((integral - p).abs());
    }
    Ok(format!("{} certified runs, max |∫d dξ − p| = {worst:.1e}", runs.len()))
}

fn step_law() -> Outcome {
    let mut rows = 0;
    for run in certified_runs() {
        let out = solve(&run);
        let p = run.model.n_params() as f64;
        let n = out.trace.len();
        for (k, r) in out.trace.iter().enumerate() {
            if k + 1 < n {
                ensure!(r.step > 0.0 && r.step < 1.0 / p, "{}: α = {} at iter {}", run.name, r.step, r.iter);
            }
            if k > 0 {
                ensure!(r.criterion_value >= out.trace[k - 1].criterion_value - 1e-12, "{}: log det fell at iter {}", run.name, r.iter);
            }
        }
        rows += n;
    }
    Ok(format!("{rows} iterations checked"))
}

fn multiplicative_agreement() -> Outcome {
    let grid = line(-1.0, 1.0, 41);
    let model = LinearModel::polynomial(2);
    let fw = fedorov_wynn(&model, &[0.0; 3], &SolverOptions::new(grid.clone()), None).unwrap();
    let mu = multiplicative_solve(&model, &[0.0; 3], &grid, 1_000_000, 1e-6).unwrap();
    let gap = (fw.value - mu.value).abs();
    ensure!(gap <= 1e-6, "|Δ log det| = {gap:e}");
    Ok(format!("|Δ log det| = {gap:.1e}"))
}

fn hadamard_exchange() -> Outcome {
    let start = Instant::now();
    let levels = vec![-1.0, 0.0, 1.0];
    let cands = tensor_grid(&vec![levels; 8]);
    let out = exchange_exact(&LinearModel::identity(8), &[0.0; 8], 8, &cands, 20, 0).unwrap();
    let eff = ((out.log_det - 8.0 * 8f64.ln()) / 8.0).exp();
    ensure!(eff >= 0.95, "efficiency {eff:.4}");
    within(Duration::from_secs(30), start)?;
    Ok(format!("{} candidates, efficiency {eff:.4}, {:.1?}", cands.len(), start.elapsed()))
}

fn frequency_design() -> Outcome {
    let model = InputModel::fir(2).unwrap();
    let theta = [0.5, -0.2];
    let total = 1.0;
    let omegas: Vec<f64> = linspace(0.0, PI, 65).into_iter().skip(1).collect();
    let out = optimal_spectrum(&model, &theta, &omegas, total, &SolverOptions::new(vec![])).unwrap();
    let s = &out.spectrum;
    ensure!(out.certificate.certified, "certificate max d {}", out.certificate.max_d);
    ensure!(s.len() <= 2, "{} lines", s.len());
    let mean_cos = s.omega.iter().zip(&s.power).map(|(w, l)| l * w.cos()).sum::<f64>() / total;
    ensure!(mean_cos.abs() <= 1e-6, "power-weighted mean cos ω = {mean_cos:e}");
    let det = spectrum_info(&model, &theta, s).unwrap().matrix().determinant();
    let analytic = total * total * (1.0 - mean_cos * mean_cos);
    ensure!((det - analytic).abs() <= 1e-8, "det {det} vs {analytic}");
    Ok(format!("{} line(s) at {:?}, det {det:.10}", s.len(), s.omega))
}

fn kriging_interpolation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = (0.0f64, 0.0f64);
    for case in 0..100 {
        let d = rng.random_range(1..=2usize);
        let n = rng.random_range(1..=50usize);
        let k = (n as f64).powf(1.0 / d as f64).ceil() as usize;
        let h = 1.0 / k as f64;
        let mut cells: Vec<usize> = (0..k.pow(d as u32)).collect();
        for i in (1..cells.len()).rev() {
            cells.swap(i, rng.random_range(0..=i));
        }
        let sites: Vec<Point> = cells[..n]
            .iter()
            .map(|c| (0..d).map(|i| (((c / k.pow(i as u32)) % k) as f64 + rng.random_range(0.25..0.75)) * h).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let family = if case % 2 == 0 { KernelFamily::SquaredExponential } else { KernelFamily::Exponential };
        let var = rng.random_range(0.5..4.0);
        let kernel = Kernel::new(family, rng.random_range(0.3..1.5) * h, var, 0.0).unwrap();
        let model = KrigingModel::fit(kernel, KrigingData::new(sites.clone(), y.clone()).unwrap()).map_err(|e| e.to_string())?;
        for (s, yi) in sites.iter().zip(&y) {
            let p = model.predict(s).map_err(|e| e.to_string())?;
            ensure!((p.mean - yi).abs() <= 1e-10, "case {case}: ŷ − y = {:e}", p.mean - yi);
            ensure!(p.mse <= 1e-10 * var, "case {case}: ρ² = {:e}", p.mse);
            worst = (worst.0.max((p.mean - yi).abs()), worst.1.max(p.mse / var));
        }
    }
    Ok(format!("100 datasets, max |ŷ − y| {:.1e}, max ρ²/σ_P² {:.1e}", worst.0, worst.1))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
        return l + r + (l + r - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, l, tol / 2.0, depth - 1) + adaptive_simpson(f, m, b, r, tol / 2.0, depth - 1)
}

fn ei_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (mean, rho, y_max) = (rng.random_range(-3.0..3.0), rng.random_range(0.05..3.0), rng.random_range(-3.0..3.0));
        let hi = mean + 12.0 * rho;
        let f = |y: f64| (y - y_max) * (-0.5 * ((y - mean) / rho).powi(2)).exp() / (rho * (2.0 * PI).sqrt());
        let q = if y_max >= hi { 0.0 } else { adaptive_simpson(&f, y_max, hi, simpson(&f, y_max, hi), 1e-13, 50) };
        let ei = ei_from_prediction(&Prediction { mean, mse: rho * rho }, y_max);
        ensure!(ei >= 0.0, "negative EI");
        worst = worst.max((ei - q).abs());
    }
    ensure!(worst <= 1e-8, "max |closed form − quadrature| = {worst:e}");
    for mean in linspace(-3.0, 3.0, 31) {
        for rho in linspace(0.0, 3.0, 31) {
            ensure!(ei_from_prediction(&Prediction { mean, mse: rho * rho }, 0.0) >= 0.0, "EI < 0 at ({mean}, {rho})");
        }
    }
    Ok(format!("50 cases, max |Δ| {worst:.1e}"))
}

fn ego_multimodal() -> Outcome {
    let g = |u: f64| (10.0 * u).sin() + u;
    let target = linspace(0.0, 1.0, 100_001).into_iter().max_by(|a, b| g(*a).total_cmp(&g(*b))).unwrap();
    let space = oedkit::design::DesignSpace::interval(0.0, 1.0).unwrap();
    let kernel = Kernel::new(KernelFamily::SquaredExponential, 0.1, 1.0, 0.0).unwrap();
    let mut hits = 0;
    let mut evals = Vec::new();
    for seed in 0..10 {
        let mut f = |u: &[f64]| g(u[0]);
        let out = ego_optimize(&mut f, &space, None, &EgoOptions { seed, ..EgoOptions::new(kernel, 40) }).unwrap();
        evals.push(out.trace.len());
        if (out.best_point[0] - target).abs() <= 0.02 {
            hits += 1;
        }
    }
    let most = *evals.iter().max().unwrap();
    ensure!(hits >= 9, "{hits}/10 seeds within 0.02 of {target:.5}");
    ensure!(most < 51, "{most} evaluations");
    Ok(format!("{hits}/10 hits, at most {most} evaluations"))
}

fn lai_wei() -> Outcome {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..20).collect();
    let finals = replicate(&seeds, |s| {
        let t = simulate_lai_wei([1.0, 2.0], 1.0, 100_000, 1.0, s).unwrap();
        (t.last("theta1").unwrap(), t.last("theta2").unwrap())
    });
    let t1: Vec<f64> = finals.iter().map(|f| f.0).collect();
    let t2: Vec<f64> = finals.iter().map(|f| f.1).collect();
    let err = median(&t2.iter().map(|t| (t - 1.0).abs()).collect::<Vec<_>>());
    let ratio = (std_dev(&t1) / std_dev(&t2)).powi(2);
    let summary = format!("median |θ̂₂ − 1| = {err:.4}, variance ratio {ratio:.1}, {:.1?}", start.elapsed());
    ensure!(err <= 0.05, "{summary}");
    ensure!(ratio >= 10.0, "{summary}");
    within(Duration::from_secs(30), start)?;
    Ok(summary)
}

fn nfc() -> Outcome {
    let plant = ScalarPlant::new(1.0, 0.01, 1.0, 0.0).unwrap();
    let t = simulate_nfc(&plant, 1.0, 2.0, Controller::Nfc, 1000, 0).unwrap();
    let (x, th) = (t.last("x").unwrap(), t.last("theta_hat").unwrap());
    let noisy = ScalarPlant { sigma: 0.5, ..plant };
    let seeds: Vec<u64> = (0..20).collect();
    let hits = replicate(&seeds, |s| {
        let th = simulate_nfc(&noisy, 1.0, 2.0, Controller::Nfc, 1000, s).unwrap().column("theta_hat");
        std_dev(&th[th.len() - 500..]) >= 0.05
    })
    .into_iter()
    .filter(|b| *b)
    .count();
    let summary = format!("|x(10 s)| = {:.4}, |θ̂ − 1| = {:.4}, dispersion in {hits}/20 seeds", x.abs(), (th - 1.0).abs());
    ensure!(x.abs() <= 1e-3 && (th - 1.0).abs() <= 0.05 && hits >= 16, "{summary}");
    Ok(summary)
}

fn estimating_function() -> Outcome {
    let plant = ScalarPlant::new(1.0, 0.01, 1.0, 0.0).unwrap();
    let t = simulate_nfc(&plant, 1.0, 2.0, Controller::Nfc, 1000, 0).unwrap();
    let (y, u) = (t.column("y"), t.column("u"));
    let mut worst: f64 = 0.0;
    for k in 1..=1000 {
        worst = worst.max((ef_estimate(&y, &u, 0.01, k).unwrap() - 1.0).abs());
    }
    ensure!(worst <= 1e-10, "noise-free EF error {worst:e}");
    let noisy = ScalarPlant { sigma: 0.5, ..plant };
    let seeds: Vec<u64> = (0..20).collect();
    let errs = replicate(&seeds, |s| {
        (simulate_nfc(&noisy, 1.0, 2.0, Controller::FceEf, 10_000, s).unwrap().last("theta_tilde").unwrap() - 1.0).abs()
    });
    let med = median(&errs);
    ensure!(med <= 0.1, "median |θ̃ − 1| = {med}");
    Ok(format!("noise-free error {worst:.1e}, closed-loop median |θ̃ − 1| = {med:.4}"))
}

fn rel_err(g: &[f64], fd: &[f64]) -> f64 {
    let scale = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let diff = g.iter().zip(fd).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    if scale == 0.0 { diff } else { diff / scale }
}

fn sensitivities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut check = |name: &'static str, model: &dyn RegressionModel, draw: Draw| {
        let mut w: f64 = 0.0;
        for _ in 0..100 {
            let (theta, u) = draw(&mut rng);
            let g = model.sensitivity(&theta, &u).unwrap();
            let fd = finite_difference_sensitivity(model, &theta, &u, 1e-6).unwrap();
            w = w.max(rel_err(&g, &fd));
        }
        worst.push((name, w));
    };
    check("polynomial", &LinearModel::polynomial(3), &mut |r| {
        ((0..4).map(|_| r.random_range(-3.0..3.0)).collect(), vec![r.random_range(-2.0..2.0)])
    });
    check("weighing", &LinearModel::identity(8), &mut |r| {
        ((0..8).map(|_| r.random_range(-3.0..3.0)).collect(), (0..8).map(|_| r.random_range(-1.0..1.0)).collect())
    });
    check("exponential", &ExponentialDecay, &mut |r| (vec![r.random_range(0.05..3.0)], vec![r.random_range(0.0..10.0)]));
    let nominal = CompartmentModel::NOMINAL_THETA;
    check("compartment", &CompartmentModel::standard(), &mut |r| {
        let theta = vec![
            nominal[0] * r.random_range(0.5..1.5),
            nominal[1] * r.random_range(0.5..1.5),
            nominal[2] * r.random_range(0.5..1.5),
            r.random_range(20.0..40.0),
        ];
        (theta, vec![r.random_range(0.5..720.0)])
    });
    // One-pole input model: per-frequency information against differences of F(e^{jω}).
    let model = InputModel::new(1, 1, RationalTF::unit(), 1.0).unwrap();
    let mut w: f64 = 0.0;
    for _ in 0..100 {
        let (b, a, om) = (rng.random_range(-2.0..2.0), rng.random_range(-0.9..0.9), rng.random_range(0.0..PI));
        let f = |b: f64, a: f64| {
            let z = Complex64::from_polar(1.0, -om);
            b * z / (1.0 + a * z)
        };
        let h = 1e-6;
        let g = [(f(b + h, a) - f(b - h, a)) / (2.0 * h), (f(b, a + h) - f(b, a - h)) / (2.0 * h)];
        let fd = DMatrix::from_fn(2, 2, |i, j| (g[i] * g[j].conj()).re);
        let m = freq_info_matrix(&model, &[b, a], om).unwrap();
        w = w.max((m.matrix() - &fd).amax() / fd.amax());
    }
    worst.push(("one-pole", w));
    let bad: Vec<_> = worst.iter().filter(|(_, e)| *e > 1e-4).collect();
    ensure!(bad.is_empty(), "{bad:?}");
    let parts: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    Ok(parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 14] = [
        ("weighing gain", weighing_gain),
        ("pharmacokinetic D-optimal schedule", pk_schedule),
        ("equivalence invariant", equivalence_invariant),
        ("Fedorov step law", step_law),
        ("multiplicative / Fedorov-Wynn agreement", multiplicative_agreement),
        ("Hadamard exchange", hadamard_exchange),
        ("frequency design", frequency_design),
        ("kriging interpolation", kriging_interpolation),
        ("expected improvement", ei_correctness),
        ("EGO on sin(10u) + u", ego_multimodal),
        ("Lai-Wei limits", lai_wei),
        ("NFC convergence and noisy dispersion", nfc),
        ("estimating function", estimating_function),
        ("sensitivities vs finite differences", sensitivities),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.2}s]: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
