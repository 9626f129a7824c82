use nalgebra::{Matrix3, Vector3};

use super::{Noise, SimTrace};
use crate::design::linspace;
use crate::error::{Error, Result};

/// Exploration weight α_k added to the certainty-equivalence objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    /// α_k ≡ 0: forced certainty equivalence.
    None,
    /// α_k = (log k)^{1+δ}.
    LogPower(f64),
}

impl Exploration {
    fn alpha(&self, k: usize) -> f64 {
        match self {
            Exploration::None => 0.0,
            Exploration::LogPower(delta) => (k as f64).ln().powf(1.0 + delta),
        }
    }
}

fn regressors(u: f64) -> Vector3<f64> {
    Vector3::new(1.0, u, u * u)
}

/// Self-tuning optimizer of f(u, θ) = θ₀ + θ₁u + θ₂u² on [lower, upper].
///
/// The first three inputs are the ends and midpoint of the interval. After that,
/// u_{k+1} maximizes f(u, θ̂ᵏ) + α_k d(u, ξ_k)/k over a grid of `levels` points, where
/// θ̂ᵏ is the LS estimate from all k observations and d(u, ξ_k)/k = r(u)ᵀ M_k⁻¹ r(u).
#[allow(clippy::too_many_arguments)]
pub fn simulate_sto(
    theta_true: [f64; 3],
    sigma: f64,
    n: usize,
    exploration: Exploration,
    lower: f64,
    upper: f64,
    levels: usize,
    seed: u64,
) -> Result<SimTrace> {
    if theta_true[2] >= 0.0 {
        return Err(Error::InvalidArgument("the quadratic coefficient must be negative".into()));
    }
    if let Exploration::LogPower(d) = exploration {
        if !(d > 0.0) {
            return Err(Error::InvalidArgument(format!("exploration exponent δ = {d} must be positive")));
        }
    }
    if !(lower < upper) || levels < 3 || n < 3 {
        return Err(Error::InvalidArgument("need lower < upper, levels >= 3 and n >= 3".into()));
    }
    let grid = linspace(lower, upper, levels);
    let regs: Vec<Vector3<f64>> = grid.iter().map(|u| regressors(*u)).collect();
    let truth = Vector3::from(theta_true);
    let mut noise = Noise::new(seed, sigma);
    let mut trace = SimTrace::new(&["k", "u", "y", "theta0", "theta1", "theta2", "avg_f", "log_det"]);
    let mut m = Matrix3::zeros();
    let mut b = Vector3::zeros();
    let mut sum_f = 0.0;
    let mut u = grid[0];
    let forced = [grid[0], grid[(levels - 1) / 2], grid[levels - 1]];
    let mut theta = Vector3::repeat(f64::NAN);
    for k in 1..=n {
        let r = regressors(u);
        let f = truth.dot(&r);
        let y = f + noise.draw();
        m += r * r.transpose();
        b += r * y;
        sum_f += f;
        let chol = m.cholesky();
        let ld = chol.as_ref().map_or(f64::NEG_INFINITY, |c| 2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>());
        if let Some(c) = &chol {
            if k >= 3 {
                theta = c.solve(&b);
            }
        }
        trace.push(vec![k as f64, u, y, theta[0], theta[1], theta[2], sum_f / k as f64, ld]);
        u = if let Some(&f) = forced.get(k) {
            f
        } else {
            let c = chol.as_ref().ok_or(Error::SingularInformation(0.0))?;
            let alpha = exploration.alpha(k);
            let score: Vec<f64> = regs
                .iter()
                .map(|r| theta.dot(r) + if alpha > 0.0 { alpha * r.dot(&c.solve(r)) } else { 0.0 })
                .collect();
            grid[crate::par::argmax(&score).expect("nonempty grid").0]
        };
    }
    let eig = m.symmetric_eigenvalues();
    trace.notes.push(format!("condition ratio of M_N: {:.3e}", eig.min() / eig.max()));
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_certainty_equivalence_hits_optimum() {
        let t = simulate_sto([0.0, 1.0, -1.0], 0.0, 50, Exploration::None, -2.0, 2.0, 401, 1).unwrap();
        let us = t.column("u");
        assert!(us[3..].iter().all(|u| (u - 0.5).abs() < 1e-12));
        assert!((t.last("theta1").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn convex_objective_rejected() {
        assert!(simulate_sto([0.0, 1.0, 1.0], 0.1, 50, Exploration::None, -2.0, 2.0, 401, 1).is_err());
    }
}
