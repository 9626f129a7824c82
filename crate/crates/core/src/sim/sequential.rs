use log::warn;
use nalgebra::DMatrix;

use super::{gauss_newton, Noise, SimTrace};
use crate::design::Point;
use crate::error::{Error, Result};
use crate::info::{InfoSource, LocalModel};
use crate::models::RegressionModel;
use crate::par;
use crate::solvers::{d_values, inverse_spd, is_regular, log_det};

const GN_ITERS: usize = 100;

/// `m` distinct grid indices at evenly spaced quantiles (the middle one for m = 1).
fn quantile_indices(len: usize, m: usize) -> Vec<usize> {
    if m == 1 {
        return vec![(len - 1) / 2];
    }
    (0..m).map(|i| ((i * (len - 1)) as f64 / (m - 1) as f64).round() as usize).collect()
}

fn check_grid(grid: &[Point], needed: usize, dim: usize) -> Result<()> {
    if grid.len() < needed {
        return Err(Error::InsufficientCandidates { needed, available: grid.len() });
    }
    if let Some(u) = grid.iter().find(|u| u.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
    }
    Ok(())
}

fn columns(dim: usize, extra: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut c = vec!["k".to_string()];
    c.extend((0..dim).map(|j| format!("u{j}")));
    c.push("y".into());
    c.extend(extra);
    c
}

/// Unnormalized information Σ f fᵀ at `theta`; None when a sensitivity is not finite.
fn information(model: &dyn RegressionModel, theta: &[f64], us: &[Point]) -> Option<DMatrix<f64>> {
    let p = model.n_params();
    let factors = LocalModel::new(model, theta).and_then(|l| l.factors(us)).ok()?;
    let mut m = DMatrix::zeros(p, p);
    for f in &factors {
        m += f * f.transpose();
    }
    m.iter().all(|x| x.is_finite()).then_some(m)
}

/// Sequential D-optimal design with LS re-estimation.
///
/// The first p points are grid quantiles. Each later point maximizes
/// d(u) = g(u)ᵀ M_k⁻¹ g(u) at the current estimate, where M_k sums the information
/// contributions of the points observed so far; observations are
/// η(θ̄, u) + σε. Estimates come from Gauss–Newton started at the previous estimate;
/// a failed fit, or one that leaves M_k singular, keeps the previous estimate and
/// is flagged.
#[allow(clippy::too_many_arguments)]
pub fn sequential_design(
    model: &dyn RegressionModel,
    theta_true: &[f64],
    theta0: &[f64],
    grid: &[Point],
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<SimTrace> {
    let p = model.n_params();
    if theta_true.len() != p || theta0.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: theta_true.len().min(theta0.len()) });
    }
    check_grid(grid, p, model.dim())?;
    if n < p {
        return Err(Error::InfeasibleSize { n, p });
    }
    let extra = (0..p).map(|j| format!("theta{j}")).chain(["log_det".to_string(), "flag".to_string()]);
    let mut trace = SimTrace { columns: columns(model.dim(), extra), rows: Vec::new(), notes: Vec::new(), failure: None };
    let start = quantile_indices(grid.len(), p);
    let mut noise = Noise::new(seed, sigma);
    let mut theta = theta0.to_vec();
    let mut us: Vec<Point> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut minv: Option<DMatrix<f64>> = None;
    for k in 1..=n {
        let u = if k <= p {
            grid[start[k - 1]].clone()
        } else {
            let inv = minv.as_ref().ok_or(Error::SingularInformation(0.0))?;
            let table = LocalModel::new(model, &theta)?.factors(grid)?;
            grid[par::argmax(&d_values(inv, &table)).expect("nonempty grid").0].clone()
        };
        let y = model.response(theta_true, &u)? + noise.draw();
        us.push(u.clone());
        ys.push(y);
        let mut flag = 0.0;
        if k >= p {
            match gauss_newton(model, &us, &ys, &theta, GN_ITERS) {
                // A fit that leaves the information singular (e.g. an exponential
                // rate driven to overflow by one noisy point) cannot steer the design.
                Ok(fit) if information(model, &fit.theta, &us).is_none_or(|m| !is_regular(&m)) => {
                    flag = 1.0;
                    trace.notes.push(format!("step {k}: fit gives singular information; keeping previous estimate"));
                    warn!("sim: sequential step {k}: fit gives singular information");
                }
                Ok(fit) => theta = fit.theta,
                Err(e) => {
                    flag = 1.0;
                    trace.notes.push(format!("step {k}: {e}; keeping previous estimate"));
                    warn!("sim: sequential step {k}: {e}");
                }
            }
        }
        let m = information(model, &theta, &us).ok_or(Error::SingularInformation(0.0))?;
        minv = if is_regular(&m) { inverse_spd(&m) } else { None };
        let ld = if minv.is_some() { log_det(&m) } else { f64::NEG_INFINITY };
        let mut row = vec![k as f64];
        row.extend(&u);
        row.push(y);
        row.extend(&theta);
        row.push(ld);
        row.push(flag);
        trace.push(row);
    }
    Ok(trace)
}

/// Sequential discrimination between two models: after max(p_A, p_B) quantile
/// points, each step fits both models by LS and observes at the grid point where
/// [η_A(θ̂_A, u) − η_B(θ̂_B, u)]² is largest (lowest index on ties). Data come from
/// model A at `theta_true`.
#[allow(clippy::too_many_arguments)]
pub fn discriminate_sequential(
    model_a: &dyn RegressionModel,
    theta_a0: &[f64],
    model_b: &dyn RegressionModel,
    theta_b0: &[f64],
    theta_true: &[f64],
    grid: &[Point],
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<SimTrace> {
    let (pa, pb) = (model_a.n_params(), model_b.n_params());
    if theta_a0.len() != pa || theta_true.len() != pa {
        return Err(Error::DimensionMismatch { expected: pa, got: theta_a0.len().min(theta_true.len()) });
    }
    if theta_b0.len() != pb {
        return Err(Error::DimensionMismatch { expected: pb, got: theta_b0.len() });
    }
    if model_a.dim() != model_b.dim() {
        return Err(Error::DimensionMismatch { expected: model_a.dim(), got: model_b.dim() });
    }
    let p = pa.max(pb);
    check_grid(grid, p, model_a.dim())?;
    if n < p {
        return Err(Error::InfeasibleSize { n, p });
    }
    let extra = (0..pa)
        .map(|j| format!("a_theta{j}"))
        .chain((0..pb).map(|j| format!("b_theta{j}")))
        .chain(["rss_a", "rss_b", "gap", "flag"].map(String::from));
    let mut trace = SimTrace { columns: columns(model_a.dim(), extra), rows: Vec::new(), notes: Vec::new(), failure: None };
    let start = quantile_indices(grid.len(), p);
    let mut noise = Noise::new(seed, sigma);
    let (mut ta, mut tb) = (theta_a0.to_vec(), theta_b0.to_vec());
    let (mut rss_a, mut rss_b) = (f64::NAN, f64::NAN);
    let mut us: Vec<Point> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for k in 1..=n {
        let (u, gap) = if k <= p {
            (grid[start[k - 1]].clone(), f64::NAN)
        } else {
            let ea = model_a.responses(&ta, grid)?;
            let eb = model_b.responses(&tb, grid)?;
            let gaps: Vec<f64> = ea.iter().zip(&eb).map(|(a, b)| (a - b) * (a - b)).collect();
            let (i, g) = par::argmax(&gaps).expect("nonempty grid");
            (grid[i].clone(), g)
        };
        let y = model_a.response(theta_true, &u)? + noise.draw();
        us.push(u.clone());
        ys.push(y);
        let mut flag = 0.0;
        if k >= p {
            for (label, model, theta, rss) in
                [("A", model_a, &mut ta, &mut rss_a), ("B", model_b, &mut tb, &mut rss_b)]
            {
                match gauss_newton(model, &us, &ys, theta, GN_ITERS) {
                    Ok(fit) => {
                        *theta = fit.theta;
                        *rss = fit.rss;
                    }
                    Err(e) => {
                        flag = 1.0;
                        trace.notes.push(format!("step {k}: model {label}: {e}; keeping previous estimate"));
                    }
                }
            }
        }
        let mut row = vec![k as f64];
        row.extend(&u);
        row.push(y);
        row.extend(&ta);
        row.extend(&tb);
        row.extend([rss_a, rss_b, gap, flag]);
        trace.push(row);
    }
    Ok(trace)
}
