use super::{check_args, RegressionModel};
use crate::error::Result;

/// η(θ,u) = exp(−θu), a one-parameter decay.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialDecay;

impl RegressionModel for ExponentialDecay {
    fn n_params(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        1
    }

    fn response(&self, theta: &[f64], u: &[f64]) -> Result<f64> {
        check_args(theta, 1, u, 1)?;
        Ok((-theta[0] * u[0]).exp())
    }

    fn sensitivity(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(theta, 1, u, 1)?;
        Ok(vec![-u[0] * (-theta[0] * u[0]).exp()])
    }
}
