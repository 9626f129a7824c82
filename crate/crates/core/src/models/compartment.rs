use serde::{Deserialize, Serialize};

use super::{check_args, RegressionModel};
use crate::design::Point;
use crate::error::{Error, Result};

/// Default integration step in minutes.
pub const DEFAULT_STEP: f64 = 0.05;

/// Constant-rate infusion over `[start, end)`, in mg/min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfusionSegment {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

/// Two-compartment model with central and peripheral amounts x_C, x_P:
///
///   x_C' = −(K_EL + K_CP) x_C + K_PC x_P + u(t)
///   x_P' = K_CP x_C − K_PC x_P
///
/// observed through y = x_C / V. Parameters are ordered (K_CP, K_PC, K_EL, V).
/// Sensitivities come from the forward sensitivity equations, integrated with
/// the state by fixed-step RK4 on a lattice anchored at each input breakpoint,
/// so a time gets the same value whether evaluated alone or in a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentModel {
    pieces: Vec<(f64, f64, f64)>,
    step: f64,
}

type State = [f64; 8];

impl CompartmentModel {
    pub const NOMINAL_THETA: [f64; 4] = [0.066, 0.038, 0.0242, 30.0];

    pub fn new(input: &[InfusionSegment], step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("integration step {step} must be positive")));
        }
        if input.is_empty() {
            return Err(Error::InvalidArgument("empty input profile".into()));
        }
        for s in input {
            if !(s.start >= 0.0 && s.end > s.start && s.end.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad infusion segment {s:?}")));
            }
            if !(s.rate >= 0.0 && s.rate.is_finite()) {
                return Err(Error::InvalidArgument(format!("infusion rate {} must be >= 0", s.rate)));
            }
        }
        let mut cuts: Vec<f64> = vec![0.0];
        for s in input {
            cuts.push(s.start);
            cuts.push(s.end);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .map(|w| {
                let rate = input.iter().filter(|s| s.start <= w[0] && s.end >= w[1]).map(|s| s.rate).sum();
                (w[0], w[1], rate)
            })
            .collect();
        Ok(CompartmentModel { pieces, step })
    }

    /// 75 mg/min during the first minute, then 1.45 mg/min up to 720 min.
    pub fn standard() -> Self {
        Self::new(
            &[
                InfusionSegment { start: 0.0, end: 1.0, rate: 75.0 },
                InfusionSegment { start: 1.0, end: 720.0, rate: 1.45 },
            ],
            DEFAULT_STEP,
        )
        .expect("valid default profile")
    }

    pub fn with_step(&self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("integration step {step} must be positive")));
        }
        Ok(CompartmentModel { pieces: self.pieces.clone(), step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.1)
    }

    fn check_theta(theta: &[f64]) -> Result<()> {
        if theta[3] <= 0.0 {
            return Err(Error::InvalidArgument(format!("volume {} must be positive", theta[3])));
        }
        if theta[..3].iter().any(|k| *k < 0.0) {
            return Err(Error::InvalidArgument(format!("rate constants {:?} must be >= 0", &theta[..3])));
        }
        Ok(())
    }

    /// Full state (x_C, x_P and the three rate-constant sensitivities) at each time.
    fn integrate(&self, theta: &[f64], times: &[f64]) -> Result<Vec<State>> {
        Self::check_theta(theta)?;
        let horizon = self.horizon();
        for &t in times {
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::OutOfDomain(vec![t]));
            }
        }
        let (kcp, kpc, kel) = (theta[0], theta[1], theta[2]);
        let rhs = |z: &State, rate: f64| -> State {
            let a = |c: f64, p: f64| (-(kel + kcp) * c + kpc * p, kcp * c - kpc * p);
            let (xc, xp) = (z[0], z[1]);
            let (dxc, dxp) = a(xc, xp);
            let (s0c, s0p) = a(z[2], z[3]);
            let (s1c, s1p) = a(z[4], z[5]);
            let (s2c, s2p) = a(z[6], z[7]);
            [dxc + rate, dxp, s0c - xc, s0p + xc, s1c + xp, s1p - xp, s2c - xc, s2p]
        };
        let rk4 = |z: &State, dt: f64, rate: f64| -> State {
            let k1 = rhs(z, rate);
            let k2 = rhs(&axpy(z, 0.5 * dt, &k1), rate);
            let k3 = rhs(&axpy(z, 0.5 * dt, &k2), rate);
            let k4 = rhs(&axpy(z, dt, &k3), rate);
            let mut out = *z;
            for i in 0..8 {
                out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            out
        };

        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out = vec![[0.0; 8]; times.len()];
        let mut next = 0;
        let mut z: State = [0.0; 8];
        let h = self.step;
        let last = self.pieces.len() - 1;
        for (pi, &(s0, s1, rate)) in self.pieces.iter().enumerate() {
            let mut n_full = ((s1 - s0) / h).floor() as usize;
            while n_full > 0 && s0 + n_full as f64 * h > s1 {
                n_full -= 1;
            }
            let mut node = 0usize;
            let mut zn = z;
            while next < order.len() {
                let t = times[order[next]];
                if t > s1 || (t == s1 && pi != last) {
                    break;
                }
                let k = (((t - s0) / h).floor() as usize).min(n_full);
                while node < k {
                    zn = rk4(&zn, h, rate);
                    node += 1;
                }
                let dt = t - (s0 + node as f64 * h);
                out[order[next]] = if dt > 0.0 { rk4(&zn, dt, rate) } else { zn };
                next += 1;
            }
            while node < n_full {
                zn = rk4(&zn, h, rate);
                node += 1;
            }
            let dt = s1 - (s0 + node as f64 * h);
            z = if dt > 0.0 { rk4(&zn, dt, rate) } else { zn };
            if z.iter().any(|x| !x.is_finite()) {
                return Err(Error::IntegrationFailure(format!("non-finite state at t = {s1}")));
            }
        }
        if out.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationFailure("non-finite state".into()));
        }
        Ok(out)
    }

    /// Noise-free concentrations y(t) = x_C(t)/V.
    pub fn simulate(&self, theta: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        check_args(theta, 4, &[0.0], 1)?;
        Ok(self.integrate(theta, times)?.iter().map(|z| z[0] / theta[3]).collect())
    }

    /// Amounts (x_C, x_P) at each time.
    pub fn amounts(&self, theta: &[f64], times: &[f64]) -> Result<Vec<[f64; 2]>> {
        check_args(theta, 4, &[0.0], 1)?;
        Ok(self.integrate(theta, times)?.iter().map(|z| [z[0], z[1]]).collect())
    }
}

fn axpy(z: &State, a: f64, k: &State) -> State {
    let mut out = *z;
    for i in 0..8 {
        out[i] += a * k[i];
    }
    out
}

fn times_of(us: &[Point]) -> Result<Vec<f64>> {
    us.iter()
        .map(|u| if u.len() == 1 { Ok(u[0]) } else { Err(Error::DimensionMismatch { expected: 1, got: u.len() }) })
        .collect()
}

impl RegressionModel for CompartmentModel {
    fn n_params(&self) -> usize {
        4
    }

    fn dim(&self) -> usize {
        1
    }

    fn response(&self, theta: &[f64], u: &[f64]) -> Result<f64> {
        check_args(theta, 4, u, 1)?;
        Ok(self.simulate(theta, &[u[0]])?[0])
    }

    fn sensitivity(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(theta, 4, u, 1)?;
        Ok(self.sensitivities(theta, &[u.to_vec()])?.remove(0))
    }

    fn sensitivities(&self, theta: &[f64], us: &[Point]) -> Result<Vec<Vec<f64>>> {
        check_args(theta, 4, &[0.0], 1)?;
        let v = theta[3];
        let states = self.integrate(theta, &times_of(us)?)?;
        Ok(states.iter().map(|z| vec![z[2] / v, z[4] / v, z[6] / v, -z[0] / (v * v)]).collect())
    }

    fn responses(&self, theta: &[f64], us: &[Point]) -> Result<Vec<f64>> {
        self.simulate(theta, &times_of(us)?)
    }
}
