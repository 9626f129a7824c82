use std::fmt;
use std::sync::Arc;

use super::{check_args, RegressionModel};
use crate::error::Result;

type RegressorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Regressor map r(u) of a linear model.
#[derive(Clone)]
pub enum Regressor {
    /// (1, u, ..., u^degree) on a scalar design variable.
    Polynomial { degree: usize },
    /// r(u) = u, used by weighing designs.
    Identity { dim: usize },
    Custom { f: Arc<RegressorFn>, n_params: usize, dim: usize },
}

impl fmt::Debug for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regressor::Polynomial { degree } => write!(f, "Polynomial({degree})"),
            Regressor::Identity { dim } => write!(f, "Identity({dim})"),
            Regressor::Custom { n_params, dim, .. } => write!(f, "Custom(p={n_params}, d={dim})"),
        }
    }
}

/// η(θ,u) = r(u)ᵀθ.
#[derive(Debug, Clone)]
pub struct LinearModel {
    regressor: Regressor,
}

impl LinearModel {
    pub fn new(regressor: Regressor) -> Self {
        LinearModel { regressor }
    }

    pub fn polynomial(degree: usize) -> Self {
        Self::new(Regressor::Polynomial { degree })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(Regressor::Identity { dim })
    }

    pub fn custom<F>(n_params: usize, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(Regressor::Custom { f: Arc::new(f), n_params, dim })
    }

    pub fn regressor(&self) -> &Regressor {
        &self.regressor
    }

    pub fn regressors(&self, u: &[f64]) -> Vec<f64> {
        match &self.regressor {
            Regressor::Polynomial { degree } => {
                let mut out = Vec::with_capacity(degree + 1);
                let mut x = 1.0;
                for _ in 0..=*degree {
                    out.push(x);
                    x *= u[0];
                }
                out
            }
            Regressor::Identity { .. } => u.to_vec(),
            Regressor::Custom { f, .. } => f(u),
        }
    }
}

impl RegressionModel for LinearModel {
    fn n_params(&self) -> usize {
        match &self.regressor {
            Regressor::Polynomial { degree } => degree + 1,
            Regressor::Identity { dim } => *dim,
            Regressor::Custom { n_params, .. } => *n_params,
        }
    }

    fn dim(&self) -> usize {
        match &self.regressor {
            Regressor::Polynomial { .. } => 1,
            Regressor::Identity { dim } => *dim,
            Regressor::Custom { dim, .. } => *dim,
        }
    }

    fn response(&self, theta: &[f64], u: &[f64]) -> Result<f64> {
        check_args(theta, self.n_params(), u, self.dim())?;
        Ok(self.regressors(u).iter().zip(theta).map(|(r, t)| r * t).sum())
    }

    fn sensitivity(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(theta, self.n_params(), u, self.dim())?;
        Ok(self.regressors(u))
    }
}
