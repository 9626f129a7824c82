use nalgebra::{DMatrix, DVector};

use crate::design::Point;
use crate::error::{Error, Result};
use crate::models::RegressionModel;

#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    pub theta: Vec<f64>,
    /// Residual sum of squares at `theta`.
    pub rss: f64,
    pub iterations: usize,
}

fn rss(model: &dyn RegressionModel, theta: &[f64], us: &[Point], ys: &[f64]) -> Result<f64> {
    let eta = model.responses(theta, us)?;
    Ok(eta.iter().zip(ys).map(|(e, y)| (y - e) * (y - e)).sum())
}

/// Least squares by Gauss–Newton with step halving, started at `theta0`.
pub fn gauss_newton(model: &dyn RegressionModel, us: &[Point], ys: &[f64], theta0: &[f64], max_iter: usize) -> Result<LsFit> {
    let p = model.n_params();
    if us.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: us.len(), got: ys.len() });
    }
    if us.len() < p {
        return Err(Error::EstimationDivergence(format!("{} observations for {p} parameters", us.len())));
    }
    let mut theta = theta0.to_vec();
    let mut current = rss(model, &theta, us, ys)?;
    for it in 1..=max_iter {
        let eta = model.responses(&theta, us)?;
        let jac = model.sensitivities(&theta, us)?;
        let j = DMatrix::from_fn(us.len(), p, |i, k| jac[i][k]);
        let r = DVector::from_iterator(us.len(), ys.iter().zip(&eta).map(|(y, e)| y - e));
        let svd = j.svd(true, true);
        let smax = svd.singular_values.max();
        if !(smax > 0.0) || svd.singular_values.min() <= 1e-10 * smax {
            return Err(Error::EstimationDivergence("rank-deficient Jacobian".into()));
        }
        let delta = svd.solve(&r, 0.0).map_err(|e| Error::EstimationDivergence(e.to_string()))?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + scale * d).collect();
            if let Ok(value) = rss(model, &trial, us, ys) {
                if value.is_finite() && value <= current {
                    let change = (current - value) / current.max(f64::MIN_POSITIVE);
                    let step = delta.norm() * scale;
                    theta = trial;
                    current = value;
                    accepted = true;
                    let size = theta.iter().map(|t| t * t).sum::<f64>().sqrt().max(1.0);
                    if step <= 1e-12 * size || change <= 1e-15 {
                        return Ok(LsFit { theta, rss: current, iterations: it });
                    }
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            // No descent along the Gauss–Newton direction: stationary to working precision.
            return Ok(LsFit { theta, rss: current, iterations: it });
        }
    }
    if current.is_finite() {
        Ok(LsFit { theta, rss: current, iterations: max_iter })
    } else {
        Err(Error::EstimationDivergence("non-finite residuals".into()))
    }
}
