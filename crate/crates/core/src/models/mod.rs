//! Parametric regression models: responses, parameter sensitivities and information weights.

mod compartment;
mod exponential;
mod hadamard;
mod linear;

pub use compartment::{CompartmentModel, InfusionSegment, DEFAULT_STEP};
pub use exponential::ExponentialDecay;
pub use hadamard::{hadamard_design, hadamard_matrix};
pub use linear::{LinearModel, Regressor};

use crate::design::Point;
use crate::error::{Error, Result};

/// Scalar response model with parameter sensitivities.
pub trait RegressionModel: Send + Sync {
    /// Number of parameters.
    fn n_params(&self) -> usize;
    /// Dimension of a design point.
    fn dim(&self) -> usize;
    fn response(&self, theta: &[f64], u: &[f64]) -> Result<f64>;
    /// Gradient of the response with respect to the parameters.
    fn sensitivity(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>>;

    fn sensitivities(&self, theta: &[f64], us: &[Point]) -> Result<Vec<Vec<f64>>> {
        us.iter().map(|u| self.sensitivity(theta, u)).collect()
    }

    fn responses(&self, theta: &[f64], us: &[Point]) -> Result<Vec<f64>> {
        us.iter().map(|u| self.response(theta, u)).collect()
    }

    /// Fisher information for location of the error distribution at `u` (1 for i.i.d. errors).
    fn info_weight(&self, _u: &[f64]) -> f64 {
        1.0
    }
}

impl<M: RegressionModel + ?Sized> RegressionModel for &M {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn response(&self, theta: &[f64], u: &[f64]) -> Result<f64> {
        (**self).response(theta, u)
    }
    fn sensitivity(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        (**self).sensitivity(theta, u)
    }
    fn sensitivities(&self, theta: &[f64], us: &[Point]) -> Result<Vec<Vec<f64>>> {
        (**self).sensitivities(theta, us)
    }
    fn responses(&self, theta: &[f64], us: &[Point]) -> Result<Vec<f64>> {
        (**self).responses(theta, us)
    }
    fn info_weight(&self, u: &[f64]) -> f64 {
        (**self).info_weight(u)
    }
}

impl RegressionModel for Box<dyn RegressionModel> {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn response(&self, theta: &[f64], u: &[f64]) -> Result<f64> {
        (**self).response(theta, u)
    }
    fn sensitivity(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        (**self).sensitivity(theta, u)
    }
    fn sensitivities(&self, theta: &[f64], us: &[Point]) -> Result<Vec<Vec<f64>>> {
        (**self).sensitivities(theta, us)
    }
    fn responses(&self, theta: &[f64], us: &[Point]) -> Result<Vec<f64>> {
        (**self).responses(theta, us)
    }
    fn info_weight(&self, u: &[f64]) -> f64 {
        (**self).info_weight(u)
    }
}

pub(crate) fn check_args(theta: &[f64], p: usize, u: &[f64], d: usize) -> Result<()> {
    if theta.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: theta.len() });
    }
    if u.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: u.len() });
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite parameter {theta:?}")));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutOfDomain(u.to_vec()));
    }
    Ok(())
}

/// Central finite-difference gradient of the response, relative step `rel`.
pub fn finite_difference_sensitivity<M: RegressionModel + ?Sized>(
    model: &M,
    theta: &[f64],
    u: &[f64],
    rel: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        let h = rel * theta[j].abs().max(1e-3);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[j] += h;
        tm[j] -= h;
        out.push((model.response(&tp, u)? - model.response(&tm, u)?) / (2.0 * h));
    }
    Ok(out)
}
