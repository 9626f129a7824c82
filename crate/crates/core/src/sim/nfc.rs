use log::debug;
use serde::{Deserialize, Serialize};

use super::{std_dev, Noise, SimTrace};
use crate::error::{Error, Result};

/// x_{k+1} = x_k + T[u_k + θ̄(x_k + 1)], observed as y_k = x_k + σε_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPlant {
    pub theta: f64,
    pub period: f64,
    pub x0: f64,
    pub sigma: f64,
}

impl ScalarPlant {
    pub fn new(theta: f64, period: f64, x0: f64, sigma: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::InvalidArgument(format!("sampling period {period} must be positive")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise std {sigma} must be >= 0")));
        }
        Ok(ScalarPlant { theta, period, x0, sigma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Controller {
    /// θ̂_{k+1} = θ̂_k + T y_k(y_k + 1), u_k = −(a + θ̂_k)y_k − θ̂_k.
    Nfc,
    /// Certainty equivalence on the estimating-function estimate θ̃_k.
    FceEf,
    /// Nfc until the std of θ̃ over the last `window` steps drops below `threshold`.
    Switch { threshold: f64, window: usize },
}

/// θ̃_k = [(y_k − y₀)/(kT) − (Σ_{i<k} u_i)/k] / [1 + (Σ_{i<k} y_i)/k].
pub fn ef_estimate(y: &[f64], u: &[f64], period: f64, k: usize) -> Result<f64> {
    if k == 0 || y.len() <= k || u.len() < k {
        return Err(Error::InvalidArgument(format!("estimate at step {k} needs y_0..y_k and u_0..u_(k-1)")));
    }
    let kf = k as f64;
    let su: f64 = u[..k].iter().sum();
    let sy: f64 = y[..k].iter().sum();
    ef_ratio(y[k] - y[0], su, sy, period, kf)
}

fn ef_ratio(dy: f64, su: f64, sy: f64, period: f64, kf: f64) -> Result<f64> {
    let den = 1.0 + sy / kf;
    if den.abs() <= 1e-8 {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok((dy / (kf * period) - su / kf) / den)
}

const BLOWUP: f64 = 1e6;

/// Closed-loop run of `n` steps from x₀ with gain `a` and initial estimate `theta0`.
/// Rows k = 0..=n; y₀ = x₀ is observed without noise. A state beyond 1e6 in
/// magnitude stops the run and sets `failure`.
pub fn simulate_nfc(plant: &ScalarPlant, a: f64, theta0: f64, controller: Controller, n: usize, seed: u64) -> Result<SimTrace> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    if let Controller::Switch { threshold, window } = controller {
        if !(threshold > 0.0) || window < 2 {
            return Err(Error::InvalidArgument("switch needs threshold > 0 and window >= 2".into()));
        }
    }
    let t = plant.period;
    let mut noise = Noise::new(seed, plant.sigma);
    let mut trace =
        SimTrace::new(&["k", "t", "x", "y", "u", "theta_hat", "theta_tilde", "mode", "lyapunov"]);
    let mut x = plant.x0;
    let mut theta_hat = theta0;
    let mut theta_tilde = theta0;
    let (mut sy, mut su, mut y0) = (0.0, 0.0, 0.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut tildes: Vec<f64> = Vec::with_capacity(n + 1);
    let mut fce = controller == Controller::FceEf;
    let mut warned = false;
    for k in 0..=n {
        let y = if k == 0 { x } else { x + noise.draw() };
        if k == 0 {
            y0 = y;
        } else {
            match ef_ratio(y - y0, su, sy, t, k as f64) {
                Ok(v) => theta_tilde = v,
                Err(e) if !warned => {
                    trace.notes.push(format!("step {k}: {e}; keeping previous estimate"));
                    warned = true;
                }
                Err(_) => {}
            }
        }
        tildes.push(theta_tilde);
        if let Controller::Switch { threshold, window } = controller {
            if !fce && tildes.len() >= window && std_dev(&tildes[tildes.len() - window..]) < threshold {
                fce = true;
                trace.notes.push(format!("switched to certainty equivalence at step {k}"));
                debug!("sim: nfc switch at step {k}");
            }
        }
        let u = if fce {
            let xhat = match prev {
                Some((yp, up)) => yp + t * (up + theta_tilde * (yp + 1.0)),
                None => y,
            };
            -(a + theta_tilde) * xhat - theta_tilde
        } else {
            -(a + theta_hat) * y - theta_hat
        };
        let v = 0.5 * x * x + 0.5 * (plant.theta - theta_hat).powi(2);
        trace.push(vec![k as f64, k as f64 * t, x, y, u, theta_hat, theta_tilde, if fce { 1.0 } else { 0.0 }, v]);
        if k == n {
            break;
        }
        theta_hat += t * y * (y + 1.0);
        sy += y;
        su += u;
        prev = Some((y, u));
        x += t * (u + plant.theta * (x + 1.0));
        if !x.is_finite() || x.abs() > BLOWUP {
            trace.failure = Some(Error::NumericalBlowup(k + 1));
            break;
        }
    }
    Ok(trace)
}
