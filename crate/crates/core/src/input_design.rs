//! Frequency-domain input design for SISO models y = F(θ,z)u + G(z)e.
//!
//! F = B/A with B(z) = Σ_{i=1}^{nb} b_i z^{-i} and A(z) = 1 + Σ_{j=1}^{na} a_j z^{-j};
//! its coefficients θ_F = (b_1..b_nb, a_1..a_na) are the parameters. G is a fixed,
//! known rational function, so the information matrix concerns θ_F only.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMeasure, Point};
use crate::error::{Error, Result};
use crate::info::{source_certificate, Certificate, InfoMatrix, InfoSource};
use crate::solvers::{fedorov_wynn_source, SolverOptions, SolverOutput};

/// Rational function in z⁻¹: coefficients of z⁰, z⁻¹, ... for numerator and denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl RationalTF {
    pub fn unit() -> Self {
        RationalTF { num: vec![1.0], den: vec![1.0] }
    }

    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() || den[0] == 0.0 {
            return Err(Error::InvalidArgument("transfer function needs a nonzero leading denominator".into()));
        }
        Ok(RationalTF { num, den })
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        poly_at(&self.num, omega) / poly_at(&self.den, omega)
    }

    /// True when every pole lies strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        is_stable(&self.den)
    }
}

/// Σ c_k z^{-k} at z = e^{jω}.
fn poly_at(c: &[f64], omega: f64) -> Complex64 {
    c.iter().enumerate().map(|(k, ck)| *ck * Complex64::from_polar(1.0, -(k as f64) * omega)).sum()
}

/// Schur–Cohn step-down test on c_0 + c_1 z⁻¹ + ... + c_n z⁻ⁿ.
pub fn is_stable(den: &[f64]) -> bool {
    let mut a: Vec<f64> = den.iter().map(|x| x / den[0]).collect();
    while a.len() > 1 {
        let n = a.len() - 1;
        let k = a[n];
        if k.abs() >= 1.0 {
            return false;
        }
        let s = 1.0 - k * k;
        a = (0..n).map(|i| (a[i] - k * a[n - i]) / s).collect();
    }
    true
}

/// F = B/A parameterized by its coefficients, fixed noise filter G and noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputModel {
    pub nb: usize,
    pub na: usize,
    pub noise: RationalTF,
    pub sigma2: f64,
}

impl InputModel {
    pub fn new(nb: usize, na: usize, noise: RationalTF, sigma2: f64) -> Result<Self> {
        if nb == 0 {
            return Err(Error::InvalidArgument("F needs at least one numerator coefficient".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance {sigma2} must be positive")));
        }
        Ok(InputModel { nb, na, noise, sigma2 })
    }

    /// FIR model F = Σ b_i z^{-i} with white unit-variance noise.
    pub fn fir(taps: usize) -> Result<Self> {
        Self::new(taps, 0, RationalTF::unit(), 1.0)
    }

    pub fn n_params(&self) -> usize {
        self.nb + self.na
    }

    /// h(ω) = ∂F/∂θ_F · G⁻¹ at e^{jω}.
    pub fn sensitivity(&self, theta: &[f64], omega: f64) -> Result<Vec<Complex64>> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), got: theta.len() });
        }
        if !(0.0..=PI).contains(&omega) {
            return Err(Error::OutOfDomain(vec![omega]));
        }
        let g = self.noise.eval(omega);
        if !(g.norm() > 1e-12) || !g.is_finite() {
            return Err(Error::NoiseModelZero(omega));
        }
        let (b, a) = theta.split_at(self.nb);
        let z = |k: usize| Complex64::from_polar(1.0, -(k as f64) * omega);
        let big_a: Complex64 = Complex64::new(1.0, 0.0) + a.iter().enumerate().map(|(j, aj)| *aj * z(j + 1)).sum::<Complex64>();
        let big_b: Complex64 = b.iter().enumerate().map(|(i, bi)| *bi * z(i + 1)).sum();
        let mut h = Vec::with_capacity(self.n_params());
        for i in 1..=self.nb {
            h.push(z(i) / big_a / g);
        }
        for j in 1..=self.na {
            h.push(-z(j) * big_b / (big_a * big_a) / g);
        }
        Ok(h)
    }

    fn check_stable(&self, theta: &[f64]) -> Result<()> {
        let mut den = vec![1.0];
        den.extend_from_slice(&theta[self.nb..]);
        if is_stable(&den) { Ok(()) } else { Err(Error::Unstable) }
    }

    /// Information source over the frequency axis at θ_F.
    pub fn at(&self, theta: &[f64]) -> Result<FrequencySource<'_>> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), got: theta.len() });
        }
        self.check_stable(theta)?;
        Ok(FrequencySource { model: self, theta: theta.to_vec() })
    }
}

/// Per-frequency information M̃(ω) = (1/σ²)(aaᵀ + bbᵀ) with h = a + ib.
#[derive(Debug, Clone)]
pub struct FrequencySource<'a> {
    model: &'a InputModel,
    theta: Vec<f64>,
}

impl InfoSource for FrequencySource<'_> {
    fn n_params(&self) -> usize {
        self.model.n_params()
    }

    fn factor(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.model.sensitivity(&self.theta, u[0])?;
        let s = 1.0 / self.model.sigma2.sqrt();
        let p = h.len();
        Ok(DMatrix::from_fn(p, 2, |i, c| s * if c == 0 { h[i].re } else { h[i].im }))
    }
}

/// M̃(ω, θ_F).
pub fn freq_info_matrix(model: &InputModel, theta: &[f64], omega: f64) -> Result<InfoMatrix> {
    let f = model.at(theta)?.factor(&[omega])?;
    InfoMatrix::new(&f * f.transpose())
}

/// Discrete input spectrum: power λ_i at frequency ω_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn new(omega: Vec<f64>, power: Vec<f64>) -> Result<Self> {
        if omega.len() != power.len() {
            return Err(Error::DimensionMismatch { expected: omega.len(), got: power.len() });
        }
        for (i, (w, l)) in omega.iter().zip(&power).enumerate() {
            if !(*w > 0.0 && *w <= PI) {
                return Err(Error::OutOfDomain(vec![*w]));
            }
            if !(*l >= 0.0 && l.is_finite()) {
                return Err(Error::NegativeWeight(*l, i));
            }
            if omega[..i].contains(w) {
                return Err(Error::InvalidArgument(format!("repeated frequency {w}")));
            }
        }
        Ok(Spectrum { omega, power })
    }

    pub fn empty() -> Self {
        Spectrum { omega: vec![], power: vec![] }
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Spectrum with total power `total` distributed as the design measure.
    pub fn from_measure(measure: &DesignMeasure, total: f64) -> Result<Self> {
        Self::new(measure.support().iter().map(|u| u[0]).collect(), measure.weights().iter().map(|w| w * total).collect())
    }
}

/// Σ λ_i M̃(ω_i): information of an input with the given spectrum.
pub fn spectrum_info(model: &InputModel, theta: &[f64], spectrum: &Spectrum) -> Result<InfoMatrix> {
    let src = model.at(theta)?;
    let p = model.n_params();
    let mut m = DMatrix::zeros(p, p);
    for (w, l) in spectrum.omega.iter().zip(&spectrum.power) {
        let f = src.factor(&[*w])?;
        m += (&f * f.transpose()) * *l;
    }
    InfoMatrix::new(m)
}

#[derive(Debug, Clone)]
pub struct SpectrumOutput {
    pub spectrum: Spectrum,
    pub certificate: Certificate,
    pub solver: SolverOutput,
}

/// D-optimal input spectrum of total power `total` on a frequency grid in (0, π].
pub fn optimal_spectrum(
    model: &InputModel,
    theta: &[f64],
    omegas: &[f64],
    total: f64,
    opts: &SolverOptions,
) -> Result<SpectrumOutput> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidArgument(format!("total power {total} must be positive")));
    }
    if let Some(w) = omegas.iter().find(|w| !(**w > 0.0 && **w <= PI)) {
        return Err(Error::OutOfDomain(vec![*w]));
    }
    let src = model.at(theta)?;
    let grid: Vec<Point> = omegas.iter().map(|w| vec![*w]).collect();
    let mut opts = opts.clone();
    opts.grid = grid.clone();
    let solver = fedorov_wynn_source(&src, &opts, None)?;
    let spectrum = Spectrum::from_measure(&solver.measure, total)?;
    if spectrum.len() > model.n_params() {
        warn!("input_design: {} spectral lines exceed p_F = {}", spectrum.len(), model.n_params());
    }
    let certificate = source_certificate(&src, &solver.measure, &grid, opts.epsilon)?;
    Ok(SpectrumOutput { spectrum, certificate, solver })
}

/// u_k = Σ_i √(2λ_i) cos(ω_i k + φ_i), k = 0..n−1, with phases uniform on [0, 2π)
/// drawn from ChaCha8 seeded by `seed`.
pub fn synthesize_multisine(spectrum: &Spectrum, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 * spectrum.len() {
        return Err(Error::InvalidArgument(format!("{n} samples cannot carry {} lines", spectrum.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lines: Vec<(f64, f64, f64)> = spectrum
        .omega
        .iter()
        .zip(&spectrum.power)
        .map(|(w, l)| (*w, (2.0 * l).sqrt(), rng.random_range(0.0..2.0 * PI)))
        .collect();
    Ok((0..n)
        .map(|k| lines.iter().map(|(w, a, phi)| a * (w * k as f64 + phi).cos()).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_tap_is_flat() {
        let m = InputModel::fir(1).unwrap();
        for w in [0.1, 1.0, 3.0] {
            let mt = freq_info_matrix(&m, &[0.7], w).unwrap();
            assert!((mt.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_tap_closed_form() {
        let m = InputModel::fir(2).unwrap();
        for w in [0.2, 1.1, 2.9] {
            let mt = freq_info_matrix(&m, &[0.3, -0.4], w).unwrap();
            let expect = DMatrix::from_row_slice(2, 2, &[1.0, w.cos(), w.cos(), 1.0]);
            assert!((mt.matrix() - expect).amax() < 1e-14);
        }
    }

    #[test]
    fn stability_test() {
        assert!(is_stable(&[1.0, -0.5]));
        assert!(!is_stable(&[1.0, -1.5]));
        assert!(is_stable(&[1.0, -1.2, 0.5]));
        assert!(!is_stable(&[1.0, 0.0, 1.2]));
        let m = InputModel::new(1, 1, RationalTF::unit(), 1.0).unwrap();
        assert_eq!(m.at(&[1.0, -1.5]).unwrap_err(), Error::Unstable);
    }

    #[test]
    fn vanishing_noise_model() {
        let g = RationalTF::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let m = InputModel::new(1, 0, g, 1.0).unwrap();
        assert_eq!(freq_info_matrix(&m, &[1.0], PI).unwrap_err(), Error::NoiseModelZero(PI));
    }

    #[test]
    fn empty_spectrum_is_silent() {
        let u = synthesize_multisine(&Spectrum::empty(), 16, 3).unwrap();
        assert!(u.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn short_signal_rejected() {
        let s = Spectrum::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(synthesize_multisine(&s, 3, 0).is_err());
    }
}
