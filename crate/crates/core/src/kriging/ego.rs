use log::{debug, info};
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{distance, fit_lengthscale, latin_hypercube, Kernel, KrigingData, KrigingModel, Prediction};
use crate::design::{DesignSpace, ExactDesign, Point};
use crate::error::{Error, Result};
use crate::par;
use crate::solvers::golden_max;

/// EI = (ŷ − y_max) Φ(z) + ρ φ(z), z = (ŷ − y_max)/ρ; max(ŷ − y_max, 0) when ρ = 0.
pub fn ei_from_prediction(pred: &Prediction, y_max: f64) -> f64 {
    let rho = pred.mse.max(0.0).sqrt();
    let gain = pred.mean - y_max;
    if rho == 0.0 {
        return gain.max(0.0);
    }
    let z = gain / rho;
    let std = Normal::standard();
    if z > 0.0 {
        // gain + ρ(φ(z) − z(1 − Φ(z))) keeps EI ≥ gain when Φ(z) rounds to 1.
        gain + rho * (std.pdf(z) - z * std.sf(z)).max(0.0)
    } else {
        (rho * (std.pdf(z) + z * std.cdf(z))).max(0.0)
    }
}

/// Expected improvement over `y_max` of the Kriging predictor at `u`.
pub fn expected_improvement(kernel: &Kernel, data: &KrigingData, u: &[f64], y_max: f64) -> Result<f64> {
    expected_improvement_at(&KrigingModel::fit(*kernel, data.clone())?, u, y_max)
}

pub fn expected_improvement_at(model: &KrigingModel, u: &[f64], y_max: f64) -> Result<f64> {
    Ok(ei_from_prediction(&model.predict(u)?, y_max))
}

#[derive(Debug, Clone)]
pub struct EgoOptions {
    /// Total number of objective evaluations, initial design included.
    pub budget: usize,
    pub ei_tol: f64,
    pub seed: u64,
    pub kernel: Kernel,
    /// Lengthscales tried by profile likelihood before each step; empty keeps `kernel` fixed.
    pub lengthscales: Vec<f64>,
    /// Levels per coordinate of the EI search grid on a box.
    pub grid_per_dim: usize,
    /// Size of the default Latin hypercube start.
    pub n_init: Option<usize>,
}

impl EgoOptions {
    pub fn new(kernel: Kernel, budget: usize) -> Self {
        EgoOptions { budget, ei_tol: 1e-6, seed: 0, kernel, lengthscales: Vec::new(), grid_per_dim: 101, n_init: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgoRow {
    pub iter: usize,
    pub u: Point,
    pub y: f64,
    /// Largest EI when the point was chosen; `None` for the initial design.
    pub max_ei: Option<f64>,
    /// The EI maximizer duplicated a site and was shifted by one grid step.
    pub perturbed: bool,
}

#[derive(Debug, Clone)]
pub struct EgoOutput {
    pub best_point: Point,
    pub best_value: f64,
    pub trace: Vec<EgoRow>,
    /// Largest EI at termination (`None` when the budget ran out first).
    pub final_ei: Option<f64>,
}

/// Maximize a deterministic black-box objective by expected improvement.
pub fn ego_optimize(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    space: &DesignSpace,
    init: Option<&ExactDesign>,
    opts: &EgoOptions,
) -> Result<EgoOutput> {
    let dim = space.dim();
    let start = match init {
        Some(d) => d.clone(),
        None => {
            let n = opts.n_init.unwrap_or((2 * dim + 1).max(3)).min(opts.budget).max(1);
            let (lo, hi) = space.bounds();
            latin_hypercube(&lo, &hi, n, opts.seed)?
        }
    };
    if start.n() > opts.budget {
        return Err(Error::InvalidArgument(format!("budget {} below initial design size {}", opts.budget, start.n())));
    }
    if start.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: start.dim() });
    }
    let grid = space.grid(opts.grid_per_dim.max(2));
    let step = grid_step(space, opts.grid_per_dim.max(2));
    let mut sites: Vec<Point> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut trace = Vec::new();
    for u in start.points() {
        let y = objective(u);
        sites.push(u.clone());
        ys.push(y);
        trace.push(EgoRow { iter: trace.len() + 1, u: u.clone(), y, max_ei: None, perturbed: false });
    }
    let mut final_ei = None;
    while sites.len() < opts.budget {
        let data = KrigingData::new(sites.clone(), ys.clone())?;
        let kernel =
            if opts.lengthscales.is_empty() { opts.kernel } else { fit_lengthscale(&opts.kernel, &data, &opts.lengthscales)? };
        let model = KrigingModel::fit(kernel, data)?;
        let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ei = par::try_map(&grid, |u| expected_improvement_at(&model, u, y_max))?;
        let (idx, _) = par::argmax(&ei).expect("nonempty grid");
        let (mut u, mut best_ei) = (grid[idx].clone(), ei[idx]);
        if let DesignSpace::Box { lower, upper } = space {
            for j in 0..dim {
                let (a, b) = ((u[j] - step[j]).max(lower[j]), (u[j] + step[j]).min(upper[j]));
                let (x, v) = golden_max(
                    |x| {
                        let mut probe = u.clone();
                        probe[j] = x;
                        expected_improvement_at(&model, &probe, y_max).unwrap_or(f64::NEG_INFINITY)
                    },
                    a,
                    b,
                    40,
                );
                if v > best_ei {
                    u[j] = x;
                    best_ei = v;
                }
            }
        }
        final_ei = Some(best_ei);
        if best_ei < opts.ei_tol {
            info!("kriging: max EI {best_ei:.3e} below tolerance after {} evaluations", sites.len());
            break;
        }
        let mut perturbed = false;
        if is_duplicate(&u, &sites, &step) {
            u = perturb(&u, &sites, &step, space)?;
            perturbed = true;
            debug!("kriging: proposal duplicated a site, shifted to {u:?}");
        }
        let y = objective(&u);
        trace.push(EgoRow { iter: trace.len() + 1, u: u.clone(), y, max_ei: Some(best_ei), perturbed });
        sites.push(u);
        ys.push(y);
        final_ei = None;
    }
    let (best, _) = par::argmax(&ys).ok_or_else(|| Error::InvalidArgument("no evaluations".into()))?;
    Ok(EgoOutput { best_point: sites[best].clone(), best_value: ys[best], trace, final_ei })
}

fn grid_step(space: &DesignSpace, per_dim: usize) -> Vec<f64> {
    space.scale().iter().map(|s| s / (per_dim - 1) as f64).collect()
}

fn is_duplicate(u: &[f64], sites: &[Point], step: &[f64]) -> bool {
    let tol = 1e-9 * step.iter().copied().fold(0.0, f64::max);
    sites.iter().any(|s| distance(s, u) <= tol)
}

fn perturb(u: &[f64], sites: &[Point], step: &[f64], space: &DesignSpace) -> Result<Point> {
    for j in 0..u.len() {
        for sign in [1.0, -1.0] {
            let mut v = u.to_vec();
            v[j] += sign * step[j];
            if space.contains(&v) && !is_duplicate(&v, sites, step) {
                return Ok(v);
            }
        }
    }
    Err(Error::SingularCovariance("no admissible perturbation of a duplicate proposal".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kriging::KernelFamily;

    #[test]
    fn ei_special_values() {
        let zero = Prediction { mean: 1.0, mse: 0.0 };
        assert_eq!(ei_from_prediction(&zero, 2.0), 0.0);
        assert_eq!(ei_from_prediction(&zero, 0.5), 0.5);
        let unit = Prediction { mean: 3.0, mse: 1.0 };
        assert!((ei_from_prediction(&unit, 3.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn stops_when_init_is_optimal() {
        let kernel = Kernel::new(KernelFamily::SquaredExponential, 0.3, 1e-4, 0.0).unwrap();
        let init = ExactDesign::new(vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let mut calls = 0;
        let mut f = |u: &[f64]| {
            calls += 1;
            if u[0] == 0.5 { 1.0 } else { 0.0 }
        };
        let mut opts = EgoOptions::new(kernel, 10);
        opts.ei_tol = 1e-3;
        let space = DesignSpace::interval(0.0, 1.0).unwrap();
        let out = ego_optimize(&mut f, &space, Some(&init), &opts).unwrap();
        assert_eq!(calls, 3);
        assert_eq!(out.best_point, vec![0.5]);
        assert_eq!(out.trace.len(), 3);
    }

    #[test]
    fn budget_below_init() {
        let kernel = Kernel::new(KernelFamily::SquaredExponential, 0.3, 1.0, 0.0).unwrap();
        let init = ExactDesign::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let space = DesignSpace::interval(0.0, 1.0).unwrap();
        let r = ego_optimize(&mut |u: &[f64]| u[0], &space, Some(&init), &EgoOptions::new(kernel, 1));
        assert!(r.is_err());
    }
}
