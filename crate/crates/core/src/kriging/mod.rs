//! Ordinary Kriging with a constant mean, space-filling designs and
//! expected-improvement global optimization.

mod ego;
mod spacefill;

pub use ego::{
    ego_optimize, ei_from_prediction, expected_improvement, expected_improvement_at, EgoOptions, EgoOutput, EgoRow,
};
pub use spacefill::{fill_distance, latin_hypercube, min_distance, space_fill, SpaceFillMethod};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::design::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// C(r) = exp(−½ (r/ℓ)²)
    SquaredExponential,
    /// C(r) = exp(−r/ℓ)
    Exponential,
}

/// Covariance K(u,z) = σ_P² C(‖u − z‖) of the random process, plus observation noise σ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub process_var: f64,
    pub noise_var: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, lengthscale: f64, process_var: f64, noise_var: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidArgument(format!("lengthscale {lengthscale} must be positive")));
        }
        if !(process_var > 0.0 && process_var.is_finite()) {
            return Err(Error::InvalidArgument(format!("process variance {process_var} must be positive")));
        }
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be >= 0")));
        }
        Ok(Kernel { family, lengthscale, process_var, noise_var })
    }

    pub fn correlation(&self, r: f64) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => (-0.5 * (r / self.lengthscale).powi(2)).exp(),
            KernelFamily::Exponential => (-r / self.lengthscale).exp(),
        }
    }

    pub fn covariance(&self, u: &[f64], z: &[f64]) -> f64 {
        self.process_var * self.correlation(distance(u, z))
    }
}

pub fn distance(u: &[f64], z: &[f64]) -> f64 {
    u.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrigingData {
    pub sites: Vec<Point>,
    pub y: Vec<f64>,
}

impl KrigingData {
    pub fn new(sites: Vec<Point>, y: Vec<f64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("kriging needs at least one observation".into()));
        }
        if sites.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: sites.len(), got: y.len() });
        }
        let d = sites[0].len();
        if let Some(s) = sites.iter().find(|s| s.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: s.len() });
        }
        if sites.iter().flatten().chain(&y).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite training data".into()));
        }
        Ok(KrigingData { sites, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: f64,
    pub mse: f64,
}

/// Fitted ordinary-Kriging predictor.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    kernel: Kernel,
    data: KrigingData,
    chol: Cholesky<f64, Dyn>,
    cinv_one: DVector<f64>,
    one_cinv_one: f64,
    trend: f64,
    resid: DVector<f64>,
}

/// Pivot ratio below which C_y counts as numerically singular.
const PIVOT_RATIO: f64 = 1e-13;

fn covariance_matrix(kernel: &Kernel, sites: &[Point]) -> DMatrix<f64> {
    let n = sites.len();
    DMatrix::from_fn(n, n, |i, j| {
        kernel.covariance(&sites[i], &sites[j]) + if i == j { kernel.noise_var } else { 0.0 }
    })
}

fn factorize(c: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let scale = c.diagonal().max();
    let chol = c.cholesky().ok_or_else(|| Error::SingularCovariance("not positive definite".into()))?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, b| a.min(b * b));
    if min_pivot <= PIVOT_RATIO * scale {
        return Err(Error::SingularCovariance(format!("pivot ratio {:.2e}", min_pivot / scale)));
    }
    Ok(chol)
}

impl KrigingModel {
    pub fn fit(kernel: Kernel, data: KrigingData) -> Result<Self> {
        let n = data.len();
        let chol = factorize(covariance_matrix(&kernel, &data.sites))?;
        let one = DVector::from_element(n, 1.0);
        let y = DVector::from_column_slice(&data.y);
        let cinv_one = chol.solve(&one);
        let one_cinv_one = one.dot(&cinv_one);
        let trend = cinv_one.dot(&y) / one_cinv_one;
        let resid = chol.solve(&(y - one * trend));
        Ok(KrigingModel { kernel, data, chol, cinv_one, one_cinv_one, trend, resid })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn data(&self) -> &KrigingData {
        &self.data
    }

    /// Weighted LS estimate of the constant mean.
    pub fn trend(&self) -> f64 {
        self.trend
    }

    /// ŷ(u) = θ̂₀ + c(u)ᵀ C_y⁻¹ (y − θ̂₀ 1) and
    /// ρ²(u) = σ_P² − cᵀ C_y⁻¹ c + (1 − 1ᵀ C_y⁻¹ c)² / (1ᵀ C_y⁻¹ 1).
    pub fn predict(&self, u: &[f64]) -> Result<Prediction> {
        if u.len() != self.data.sites[0].len() {
            return Err(Error::DimensionMismatch { expected: self.data.sites[0].len(), got: u.len() });
        }
        let c = DVector::from_iterator(self.data.len(), self.data.sites.iter().map(|s| self.kernel.covariance(u, s)));
        let mean = self.trend + c.dot(&self.resid);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&c)
            .ok_or_else(|| Error::SingularCovariance("triangular solve".into()))?;
        let lag = 1.0 - self.cinv_one.dot(&c);
        let mse = self.kernel.process_var - v.norm_squared() + lag * lag / self.one_cinv_one;
        let mse = if mse >= 0.0 {
            mse
        } else if -mse <= 1e-9 * self.kernel.process_var {
            0.0
        } else {
            return Err(Error::NegativeMse(mse));
        };
        Ok(Prediction { mean, mse })
    }
}

/// Fit and predict at one point.
pub fn krige_predict(kernel: &Kernel, data: &KrigingData, u: &[f64]) -> Result<Prediction> {
    KrigingModel::fit(*kernel, data.clone())?.predict(u)
}

/// Profile-likelihood choice of the lengthscale among `candidates`, keeping the
/// noise-to-process variance ratio of `kernel` fixed and profiling σ_P² in closed form.
pub fn fit_lengthscale(kernel: &Kernel, data: &KrigingData, candidates: &[f64]) -> Result<Kernel> {
    let n = data.len() as f64;
    let ratio = kernel.noise_var / kernel.process_var;
    let y = DVector::from_column_slice(&data.y);
    let one = DVector::from_element(data.len(), 1.0);
    let mut best: Option<(f64, Kernel)> = None;
    for &ell in candidates {
        let unit = Kernel::new(kernel.family, ell, 1.0, ratio)?;
        let Ok(chol) = factorize(covariance_matrix(&unit, &data.sites)) else { continue };
        let cinv_one = chol.solve(&one);
        let trend = cinv_one.dot(&y) / one.dot(&cinv_one);
        let r = &y - &one * trend;
        let s2 = (r.dot(&chol.solve(&r)) / n).max(1e-300);
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let nll = n * s2.ln() + logdet;
        if best.as_ref().is_none_or(|(b, _)| nll < *b) {
            best = Some((nll, Kernel::new(kernel.family, ell, s2, ratio * s2)?));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::SingularCovariance("no admissible lengthscale".into()))
}
