//! Information matrices, the variance function, optimality criteria and the
//! equivalence certificate for D-optimality.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::design::{DesignMeasure, ExactDesign, Point};
use crate::error::{Error, Result};
use crate::models::RegressionModel;
use crate::par;

/// Condition ratio at or below which an information matrix counts as singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Source of per-point information contributions M(u) = F(u) F(u)ᵀ, with F of size p×r.
pub trait InfoSource: Sync {
    fn n_params(&self) -> usize;
    fn factor(&self, u: &[f64]) -> Result<DMatrix<f64>>;

    fn factors(&self, us: &[Point]) -> Result<Vec<DMatrix<f64>>> {
        par::try_map(us, |u| self.factor(u))
    }
}

impl<S: InfoSource + ?Sized> InfoSource for &S {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn factor(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        (**self).factor(u)
    }
    fn factors(&self, us: &[Point]) -> Result<Vec<DMatrix<f64>>> {
        (**self).factors(us)
    }
}

/// A regression model linearized at a parameter value: F(u) = √ℐ(u) ∂η/∂θ.
#[derive(Debug, Clone)]
pub struct LocalModel<M> {
    model: M,
    theta: Vec<f64>,
}

impl<M: RegressionModel> LocalModel<M> {
    pub fn new(model: M, theta: &[f64]) -> Result<Self> {
        if theta.len() != model.n_params() {
            return Err(Error::DimensionMismatch { expected: model.n_params(), got: theta.len() });
        }
        Ok(LocalModel { model, theta: theta.to_vec() })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: RegressionModel> InfoSource for LocalModel<M> {
    fn n_params(&self) -> usize {
        self.model.n_params()
    }

    fn factor(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.model.sensitivity(&self.theta, u)?;
        let s = self.model.info_weight(u).sqrt();
        Ok(DMatrix::from_iterator(g.len(), 1, g.into_iter().map(|x| s * x)))
    }

    fn factors(&self, us: &[Point]) -> Result<Vec<DMatrix<f64>>> {
        let gs = self.model.sensitivities(&self.theta, us)?;
        Ok(gs
            .into_iter()
            .zip(us)
            .map(|(g, u)| {
                let s = self.model.info_weight(u).sqrt();
                DMatrix::from_iterator(g.len(), 1, g.into_iter().map(|x| s * x))
            })
            .collect())
    }
}

/// Symmetric nonnegative-definite p×p information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix(DMatrix<f64>);

impl InfoMatrix {
    /// Validates symmetry (1e-12 relative) and nonnegativity (eigenvalues ≥ −1e-10 relative).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let scale = m.amax().max(1.0);
        if (&m - m.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("information matrix is not symmetric".into()));
        }
        let im = InfoMatrix(m);
        if im.eigenvalues().min() < -1e-10 * scale {
            return Err(Error::InvalidArgument("information matrix is not nonnegative definite".into()));
        }
        Ok(im)
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        InfoMatrix(m)
    }

    pub fn identity(p: usize) -> Self {
        InfoMatrix(DMatrix::identity(p, p))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// Σ w_i F_i F_iᵀ.
    pub fn from_factors(weights: &[f64], factors: &[DMatrix<f64>], p: usize) -> Self {
        let mut m = DMatrix::zeros(p, p);
        for (w, f) in weights.iter().zip(factors) {
            m.gemm(*w, f, &f.transpose(), 1.0);
        }
        symmetrize(&mut m);
        InfoMatrix(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues
    }

    /// λ_min / λ_max, or 0 when λ_max ≤ 0.
    pub fn condition_ratio(&self) -> f64 {
        let ev = self.eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        if hi <= 0.0 { 0.0 } else { lo / hi }
    }

    pub fn is_singular(&self) -> bool {
        self.condition_ratio() <= SINGULAR_RATIO
    }

    fn check_regular(&self) -> Result<()> {
        let r = self.condition_ratio();
        if r <= SINGULAR_RATIO {
            Err(Error::SingularInformation(r))
        } else {
            Ok(())
        }
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.check_regular()?;
        let chol = self.0.clone().cholesky().ok_or(Error::SingularInformation(0.0))?;
        let mut inv = chol.inverse();
        symmetrize(&mut inv);
        Ok(inv)
    }

    pub fn log_det(&self) -> Result<f64> {
        self.check_regular()?;
        log_det_spd(&self.0).ok_or(Error::SingularInformation(0.0))
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// log det of a symmetric positive-definite matrix through its Cholesky factor.
pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Σ_c f_cᵀ A f_c for the columns of `f`, i.e. trace(Fᵀ A F).
pub(crate) fn quad_form(a: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    let p = a.nrows();
    let mut total = 0.0;
    for c in 0..f.ncols() {
        for i in 0..p {
            let fi = f[(i, c)];
            if fi == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..p {
                row += a[(i, j)] * f[(j, c)];
            }
            total += fi * row;
        }
    }
    total
}

/// Information matrix of a design measure for any information source.
pub fn source_info_matrix<S: InfoSource + ?Sized>(source: &S, measure: &DesignMeasure) -> Result<InfoMatrix> {
    let factors = source.factors(measure.support())?;
    Ok(InfoMatrix::from_factors(measure.weights(), &factors, source.n_params()))
}

/// M(ξ,θ) = Σ λ_i ℐ(u_i) g(u_i) g(u_i)ᵀ.
pub fn info_matrix<M: RegressionModel>(model: &M, theta: &[f64], measure: &DesignMeasure) -> Result<InfoMatrix> {
    source_info_matrix(&LocalModel::new(model, theta)?, measure)
}

/// Normalized information (1/N) Σ ℐ(u_k) g(u_k) g(u_k)ᵀ of an exact design.
pub fn info_matrix_exact<M: RegressionModel>(model: &M, theta: &[f64], design: &ExactDesign) -> Result<InfoMatrix> {
    let src = LocalModel::new(model, theta)?;
    let factors = src.factors(design.points())?;
    let w = vec![1.0 / design.n() as f64; design.n()];
    Ok(InfoMatrix::from_factors(&w, &factors, src.n_params()))
}

/// Asymptotic covariance σ²/N · M⁻¹ of the estimator from N observations.
pub fn asymptotic_covariance(m: &InfoMatrix, sigma2: f64, n: usize) -> Result<DMatrix<f64>> {
    Ok(m.inverse()? * (sigma2 / n as f64))
}

/// Variance function values d(u,ξ) = trace(F(u)ᵀ M⁻¹ F(u)) at each point.
pub fn source_variance<S: InfoSource + ?Sized>(
    source: &S,
    measure: &DesignMeasure,
    points: &[Point],
) -> Result<Vec<f64>> {
    let minv = source_info_matrix(source, measure)?.inverse()?;
    let factors = source.factors(points)?;
    Ok(par::map(&factors, |f| quad_form(&minv, f)))
}

/// d_θ(u,ξ) = ℐ(u) g(u)ᵀ M⁻¹(ξ,θ) g(u).
pub fn variance_function<M: RegressionModel>(
    model: &M,
    theta: &[f64],
    measure: &DesignMeasure,
    u: &[f64],
) -> Result<f64> {
    Ok(source_variance(&LocalModel::new(model, theta)?, measure, &[u.to_vec()])?[0])
}

/// Optimality criteria. D and E are maximized; A and L are costs; G is the maximum
/// of the variance function over an explicit set (a cost, needs the measure).
#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    D,
    A,
    E,
    L(DMatrix<f64>),
    G(Vec<Point>),
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::D => "D",
            Criterion::A => "A",
            Criterion::E => "E",
            Criterion::L(_) => "L",
            Criterion::G(_) => "G",
        }
    }

    /// True when larger values are better.
    pub fn maximized(&self) -> bool {
        matches!(self, Criterion::D | Criterion::E)
    }
}

/// Criterion value of an information matrix.
pub fn criterion_value(crit: &Criterion, m: &InfoMatrix) -> Result<f64> {
    match crit {
        Criterion::D => m.log_det(),
        Criterion::A => Ok(m.inverse()?.trace()),
        Criterion::L(q) => {
            if q.nrows() != m.dim() || q.ncols() != m.dim() {
                return Err(Error::DimensionMismatch { expected: m.dim(), got: q.nrows() });
            }
            Ok((q.transpose() * q * m.inverse()?).trace())
        }
        Criterion::E => Ok(m.eigenvalues().min()),
        Criterion::G(_) => Err(Error::NeedsMeasure),
    }
}

/// Criterion value of a design measure; G needs the measure itself.
pub fn criterion_value_for<S: InfoSource + ?Sized>(
    crit: &Criterion,
    source: &S,
    measure: &DesignMeasure,
) -> Result<f64> {
    match crit {
        Criterion::G(set) => {
            let d = source_variance(source, measure, set)?;
            Ok(d.into_iter().fold(f64::NEG_INFINITY, f64::max))
        }
        _ => criterion_value(crit, &source_info_matrix(source, measure)?),
    }
}

/// Grid certificate of D-optimality: max d over grid ∪ support against p + ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub criterion: String,
    pub max_d: f64,
    pub p: usize,
    pub gap: f64,
    pub argmax: Point,
    pub support_d: Vec<f64>,
    pub grid_size: usize,
    pub epsilon: f64,
    pub certified: bool,
}

impl Certificate {
    pub(crate) fn from_values(p: usize, grid: &[Point], grid_d: &[f64], support: &[Point], support_d: Vec<f64>, epsilon: f64) -> Self {
        let all: Vec<f64> = grid_d.iter().chain(&support_d).copied().collect();
        let (i, max_d) = par::argmax(&all).unwrap_or((0, f64::NAN));
        let argmax = if i < grid.len() { grid[i].clone() } else { support[i - grid.len()].clone() };
        Certificate {
            criterion: "D".into(),
            max_d,
            p,
            gap: max_d - p as f64,
            argmax,
            support_d,
            grid_size: grid.len(),
            epsilon,
            certified: max_d <= p as f64 + epsilon,
        }
    }
}

/// Equivalence certificate for any information source.
pub fn source_certificate<S: InfoSource + ?Sized>(
    source: &S,
    measure: &DesignMeasure,
    grid: &[Point],
    epsilon: f64,
) -> Result<Certificate> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty certification grid".into()));
    }
    let minv = source_info_matrix(source, measure)?.inverse()?;
    let gf = source.factors(grid)?;
    let sf = source.factors(measure.support())?;
    let grid_d = par::map(&gf, |f| quad_form(&minv, f));
    let support_d = sf.iter().map(|f| quad_form(&minv, f)).collect();
    Ok(Certificate::from_values(source.n_params(), grid, &grid_d, measure.support(), support_d, epsilon))
}

/// Certifies D-optimality of `measure` for `model` at `theta` on `grid`.
pub fn equivalence_certificate<M: RegressionModel>(
    model: &M,
    theta: &[f64],
    measure: &DesignMeasure,
    grid: &[Point],
    epsilon: f64,
) -> Result<Certificate> {
    source_certificate(&LocalModel::new(model, theta)?, measure, grid, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::linspace;
    use crate::models::LinearModel;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn dirac_information() {
        let m = info_matrix(&LinearModel::polynomial(1), &[0.0, 0.0], &DesignMeasure::dirac(vec![1.0])).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_element(2, 2, 1.0));
        assert!(m.is_singular());
        assert!(matches!(m.log_det(), Err(Error::SingularInformation(_))));
    }

    #[test]
    fn symmetric_design_variance() {
        let model = LinearModel::polynomial(1);
        let xi = DesignMeasure::uniform(pts(&[-1.0, 1.0])).unwrap();
        let m = info_matrix(&model, &[0.0, 0.0], &xi).unwrap();
        assert!((m.matrix() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
        for u in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            let d = variance_function(&model, &[0.0, 0.0], &xi, &[u]).unwrap();
            assert!((d - (1.0 + u * u)).abs() < 1e-14);
        }
    }

    #[test]
    fn criteria_on_diagonals() {
        assert_eq!(criterion_value(&Criterion::D, &InfoMatrix::identity(3)).unwrap(), 0.0);
        let a = criterion_value(&Criterion::A, &InfoMatrix::diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        assert!((a - 1.25).abs() < 1e-15);
        let e = criterion_value(&Criterion::E, &InfoMatrix::diagonal(&[2.0, 3.0]).unwrap()).unwrap();
        assert!((e - 2.0).abs() < 1e-15);
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let l = criterion_value(&Criterion::L(q), &InfoMatrix::diagonal(&[2.0, 3.0]).unwrap()).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        assert_eq!(criterion_value(&Criterion::G(vec![]), &InfoMatrix::identity(2)), Err(Error::NeedsMeasure));
        let singular = InfoMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(criterion_value(&Criterion::A, &singular).is_err());
    }

    #[test]
    fn g_criterion_is_max_variance() {
        let model = LinearModel::polynomial(1);
        let src = LocalModel::new(&model, &[0.0, 0.0]).unwrap();
        let xi = DesignMeasure::uniform(pts(&[-1.0, 1.0])).unwrap();
        let g = criterion_value_for(&Criterion::G(pts(&linspace(-1.0, 1.0, 21))), &src, &xi).unwrap();
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn certificate_examples() {
        let model = LinearModel::polynomial(1);
        let grid = pts(&linspace(-1.0, 1.0, 201));
        let xi = DesignMeasure::uniform(pts(&[-1.0, 1.0])).unwrap();
        let c = equivalence_certificate(&model, &[0.0, 0.0], &xi, &grid, 1e-6).unwrap();
        assert!(c.certified);
        assert!((c.max_d - 2.0).abs() < 1e-12);
        assert_eq!(c.argmax, vec![-1.0]);
        assert_eq!(c.grid_size, 201);

        let bad = DesignMeasure::new(pts(&[-1.0, 1.0]), vec![0.9, 0.1]).unwrap();
        let c = equivalence_certificate(&model, &[0.0, 0.0], &bad, &grid, 1e-6).unwrap();
        // M = [[1, -0.8], [-0.8, 1]] with det 0.36, so d(1) = 3.6 / 0.36.
        assert!(!c.certified);
        assert!((c.max_d - 10.0).abs() < 1e-10);
        assert!(c.gap > 0.0);
    }

    #[test]
    fn certificate_json_fields() {
        let model = LinearModel::polynomial(1);
        let xi = DesignMeasure::uniform(pts(&[-1.0, 1.0])).unwrap();
        let c = equivalence_certificate(&model, &[0.0, 0.0], &xi, &pts(&[0.0]), 1e-6).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        for key in ["criterion", "max_d", "p", "gap", "argmax", "support_d", "grid_size"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(InfoMatrix::new(m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(InfoMatrix::new(m).is_err());
    }
}
