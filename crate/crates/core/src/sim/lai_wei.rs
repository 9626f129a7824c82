use super::{Noise, SimTrace};
use crate::error::{Error, Result};

/// Adaptive input of the two-parameter line y = θ₁ + θ₂u + σε:
/// u₁ = 0 and u_{n+1} = (1/n) Σu_i + (c/n) Σε_i. LS estimates are recorded at each
/// step (NaN while M_n = Σ (1, u_i)ᵀ(1, u_i) is singular).
pub fn simulate_lai_wei(theta_true: [f64; 2], c: f64, n: usize, sigma: f64, seed: u64) -> Result<SimTrace> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument("gain c must be nonzero".into()));
    }
    if n < 10 {
        return Err(Error::InvalidArgument(format!("horizon {n} below 10")));
    }
    let mut noise = Noise::new(seed, sigma);
    let mut trace = SimTrace::new(&["k", "u", "y", "theta1", "theta2", "log_det"]);
    let (mut su, mut suu, mut sy, mut suy, mut se) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut u = 0.0;
    let mut singular = false;
    for k in 1..=n {
        let e = noise.draw();
        let y = theta_true[0] + theta_true[1] * u + e;
        su += u;
        suu += u * u;
        sy += y;
        suy += u * y;
        se += e;
        let kf = k as f64;
        let det = kf * suu - su * su;
        singular = !(det > 1e-12 * (kf * suu + su * su).max(f64::MIN_POSITIVE));
        let (t1, t2, ld) = if singular {
            (f64::NAN, f64::NAN, f64::NEG_INFINITY)
        } else {
            let t2 = (kf * suy - su * sy) / det;
            ((sy - t2 * su) / kf, t2, det.ln())
        };
        trace.push(vec![kf, u, y, t1, t2, ld]);
        u = su / kf + c * se / kf;
    }
    if singular {
        trace.notes.push("M_N singular: LS estimate undefined".into());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_collapses() {
        let t = simulate_lai_wei([1.0, 2.0], 1.0, 50, 0.0, 3).unwrap();
        assert!(t.column("u").iter().all(|u| *u == 0.0));
        assert!(t.last("theta2").unwrap().is_nan());
        assert_eq!(t.notes.len(), 1);
    }

    #[test]
    fn rejects_zero_gain() {
        assert!(simulate_lai_wei([1.0, 2.0], 0.0, 50, 1.0, 3).is_err());
    }
}
