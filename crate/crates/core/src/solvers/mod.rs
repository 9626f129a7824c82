//! Design algorithms: vertex-direction (Fedorov–Wynn), multiplicative weights,
//! exchange for exact designs, and robust designs over finite parameter sets.

mod exchange;
mod fedorov;
mod multiplicative;
mod robust;

pub use exchange::{exchange_exact, exchange_exact_source, ExchangeOutput};
pub use fedorov::{fedorov_wynn, fedorov_wynn_source};
pub use multiplicative::{multiplicative_solve, multiplicative_solve_source, multiplicative_update};
pub use robust::{robust_solve, robust_solve_sources, RobustMode, RobustSpec};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMeasure, Point};
use crate::error::{Error, Result};
use crate::info::{quad_form, symmetrize, InfoMatrix, InfoSource, SINGULAR_RATIO};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Optimal step along the vertex direction, monotone in log det.
    Fedorov,
    /// α_k = 1/(k+1).
    Wynn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub step: StepRule,
    pub max_iter: usize,
    /// Stop when max d < p + epsilon.
    pub epsilon: f64,
    /// Merge tolerance, relative to the grid extent of each coordinate.
    pub merge_tol: f64,
    pub grid: Vec<Point>,
    pub seed: u64,
    pub restarts: usize,
    /// Box for golden-section refinement of each selected point; `None` keeps grid points.
    pub refine: Option<(Vec<f64>, Vec<f64>)>,
    /// Index k of the first Wynn step 1/(k+1).
    pub wynn_start: usize,
    /// Multiplicative sweeps over the final support, which drains weight from
    /// points left behind by early iterations.
    pub polish_iters: usize,
    /// Improvement window for the minimax stopping rule.
    pub window: usize,
}

impl SolverOptions {
    pub fn new(grid: Vec<Point>) -> Self {
        SolverOptions {
            step: StepRule::Fedorov,
            max_iter: 200_000,
            epsilon: 1e-4,
            merge_tol: 1e-3,
            grid,
            seed: 0,
            restarts: 20,
            refine: None,
            wynn_start: 1,
            polish_iters: 2000,
            window: 50,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("empty candidate grid".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.merge_tol < 0.0 {
            return Err(Error::InvalidArgument("merge tolerance must be >= 0".into()));
        }
        let d = self.grid[0].len();
        if let Some(p) = self.grid.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        Ok(())
    }

    /// Per-coordinate extent of the grid (1 for degenerate coordinates).
    pub fn grid_scale(&self) -> Vec<f64> {
        let d = self.grid[0].len();
        (0..d)
            .map(|j| {
                let lo = self.grid.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                let hi = self.grid.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                if hi > lo { hi - lo } else { 1.0 }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// The equivalence certificate holds at the requested epsilon.
    Certified,
    /// Iteration budget exhausted; the best iterate is returned uncertified.
    NoProgress,
    /// Stopped by the improvement-window rule (minimax mode, no certificate available).
    Stalled,
}

/// One solver iteration. `step` is the step length α (Fedorov–Wynn, robust) or the
/// L1 change of the weights (multiplicative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub criterion_value: f64,
    pub max_d: f64,
    pub step: f64,
    pub support_size: usize,
    #[serde(skip)]
    pub point: Point,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    /// Final iterate merged at the option tolerance, sorted by coordinates.
    pub measure: DesignMeasure,
    /// Final iterate before merging.
    pub raw: DesignMeasure,
    pub trace: Vec<TraceRow>,
    pub certificate: Option<crate::info::Certificate>,
    pub status: Status,
    pub iterations: usize,
    /// Criterion value of `raw` (log det, or the robust objective).
    pub value: f64,
    pub notes: Vec<String>,
}

impl SolverOutput {
    pub fn certified(&self) -> bool {
        self.status == Status::Certified
    }
}

/// Weighted support over a candidate grid plus off-grid points from refinement,
/// with one factor table per information source.
#[derive(Debug, Clone)]
pub(crate) struct WorkingDesign {
    pub points: Vec<Point>,
    pub factors: Vec<Vec<DMatrix<f64>>>,
    pub weights: Vec<f64>,
    grid_len: usize,
}

impl WorkingDesign {
    pub fn on_grid(grid: &[Point], sources: &[&dyn InfoSource]) -> Result<Self> {
        let factors = sources.iter().map(|s| s.factors(grid)).collect::<Result<Vec<_>>>()?;
        let n = grid.len();
        Ok(WorkingDesign { points: grid.to_vec(), factors, weights: vec![0.0; n], grid_len: n })
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// Index of `u`, appending it with zero weight when absent.
    pub fn locate(&mut self, u: &[f64], sources: &[&dyn InfoSource]) -> Result<usize> {
        if let Some(i) = self.points.iter().position(|p| p.as_slice() == u) {
            return Ok(i);
        }
        for (table, s) in self.factors.iter_mut().zip(sources) {
            table.push(s.factor(u)?);
        }
        self.points.push(u.to_vec());
        self.weights.push(0.0);
        Ok(self.points.len() - 1)
    }

    /// Information matrix of source `s` under the current weights.
    pub fn info(&self, s: usize, p: usize) -> DMatrix<f64> {
        weighted_info(&self.factors[s], &self.weights, p)
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w >= crate::design::PRUNE_WEIGHT).count()
    }

    /// Move weight α onto index `i`.
    pub fn step_to(&mut self, i: usize, alpha: f64) {
        for w in self.weights.iter_mut() {
            *w *= 1.0 - alpha;
        }
        self.weights[i] += alpha;
    }

    pub fn measure(&self) -> Result<DesignMeasure> {
        let (pts, ws): (Vec<Point>, Vec<f64>) = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, w)| (p.clone(), *w))
            .unzip();
        DesignMeasure::new(pts, ws)
    }

    /// Multiplicative sweeps restricted to the current support, using the
    /// prior-averaged variance function.
    pub fn polish(&mut self, prior: &[f64], p: usize, iters: usize) {
        for _ in 0..iters {
            let mut dbar = vec![0.0; self.weights.len()];
            for (s, pi) in prior.iter().enumerate() {
                let Some(minv) = inverse_spd(&self.info(s, p)) else { return };
                for (i, w) in self.weights.iter().enumerate() {
                    if *w > 0.0 {
                        dbar[i] += pi * quad_form(&minv, &self.factors[s][i]);
                    }
                }
            }
            for (w, d) in self.weights.iter_mut().zip(&dbar) {
                *w *= d / p as f64;
                if *w < crate::design::PRUNE_WEIGHT {
                    *w = 0.0;
                }
            }
            let total: f64 = self.weights.iter().sum();
            for w in self.weights.iter_mut() {
                *w /= total;
            }
        }
    }

    /// Greedy start: add grid points one at a time, each maximizing the
    /// ridge-regularized log det summed over sources, until every information
    /// matrix is regular; then weight the chosen points equally.
    pub fn greedy_start(&mut self, p: usize) -> Result<()> {
        let n = self.grid_len;
        let mut chosen: Vec<usize> = Vec::new();
        let mut mats: Vec<DMatrix<f64>> = self
            .factors
            .iter()
            .map(|t| {
                let tr: f64 = t[..n].iter().map(|f| f.norm_squared()).sum::<f64>() / n as f64;
                DMatrix::identity(p, p) * (1e-8 * tr.max(f64::MIN_POSITIVE) / p as f64)
            })
            .collect();
        let idx: Vec<usize> = (0..n).collect();
        for _ in 0..n {
            let invs: Vec<DMatrix<f64>> =
                mats.iter().map(|m| inverse_spd(m).ok_or(Error::DegenerateInit)).collect::<Result<_>>()?;
            let gains = par::map(&idx, |&j| {
                if chosen.contains(&j) {
                    return f64::NEG_INFINITY;
                }
                self.factors
                    .iter()
                    .zip(&invs)
                    .map(|(t, inv)| {
                        let f = &t[j];
                        log_det(&(DMatrix::identity(f.ncols(), f.ncols()) + f.transpose() * inv * f))
                    })
                    .sum::<f64>()
            });
            let Some((j, gain)) = par::argmax(&gains) else { break };
            if gain == f64::NEG_INFINITY {
                break;
            }
            chosen.push(j);
            for (m, t) in mats.iter_mut().zip(&self.factors) {
                m.gemm(1.0, &t[j], &t[j].transpose(), 1.0);
            }
            let w: Vec<f64> = (0..self.weights.len()).map(|i| if chosen.contains(&i) { 1.0 } else { 0.0 }).collect();
            if self.factors.iter().all(|t| is_regular(&weighted_info(t, &w, p))) {
                for &c in &chosen {
                    self.weights[c] = 1.0 / chosen.len() as f64;
                }
                return Ok(());
            }
        }
        Err(Error::RankDeficientCandidates(p))
    }

    /// Start from a user-supplied measure.
    pub fn load_start(&mut self, sources: &[&dyn InfoSource], init: &DesignMeasure, p: usize) -> Result<()> {
        for (u, w) in init.iter() {
            let i = self.locate(u, sources)?;
            self.weights[i] += w;
        }
        for s in 0..self.factors.len() {
            if !is_regular(&self.info(s, p)) {
                return Err(Error::DegenerateInit);
            }
        }
        Ok(())
    }
}

/// Σ w_i F_i F_iᵀ.
pub(crate) fn weighted_info(factors: &[DMatrix<f64>], weights: &[f64], p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    for (w, f) in weights.iter().zip(factors) {
        if *w > 0.0 {
            m.gemm(*w, f, &f.transpose(), 1.0);
        }
    }
    symmetrize(&mut m);
    m
}

pub(crate) fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = m.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

pub(crate) fn is_regular(m: &DMatrix<f64>) -> bool {
    InfoMatrix::from_raw(m.clone()).condition_ratio() > SINGULAR_RATIO
}

pub(crate) fn log_det(m: &DMatrix<f64>) -> f64 {
    crate::info::log_det_spd(m).unwrap_or(f64::NEG_INFINITY)
}

/// Variance function values of every table entry.
pub(crate) fn d_values(minv: &DMatrix<f64>, factors: &[DMatrix<f64>]) -> Vec<f64> {
    par::map(factors, |f| quad_form(minv, f))
}

/// Largest α ∈ [0,1] at which the concave map α ↦ Σ π_i log det((1−α)M_i + αA_i)
/// stops increasing, by bisection on its derivative.
pub(crate) fn line_search(current: &[DMatrix<f64>], target: &[DMatrix<f64>], prior: &[f64]) -> f64 {
    let slope = |alpha: f64| -> f64 {
        let mut s = 0.0;
        for ((m, a), pi) in current.iter().zip(target).zip(prior) {
            let b = m * (1.0 - alpha) + a * alpha;
            let Some(binv) = inverse_spd(&b) else { return f64::NEG_INFINITY };
            s += pi * (binv * (a - m)).trace();
        }
        s
    };
    if !(slope(0.0) > 0.0) {
        return 0.0;
    }
    if slope(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section maximization of a unimodal function on [a, b].
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// Smallest positive gap between distinct grid values of coordinate `j`.
pub(crate) fn grid_spacing(grid: &[Point], j: usize) -> f64 {
    let mut xs: Vec<f64> = grid.iter().map(|p| p[j]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Coordinate-wise golden-section refinement of `u` within one grid step, maximizing `score`.
pub(crate) fn refine_point(
    u: &[f64],
    grid: &[Point],
    bounds: &(Vec<f64>, Vec<f64>),
    score: impl Fn(&[f64]) -> f64,
) -> (Point, f64) {
    let mut best = u.to_vec();
    let mut best_val = score(&best);
    for j in 0..u.len() {
        let h = grid_spacing(grid, j);
        if !h.is_finite() {
            continue;
        }
        let lo = (best[j] - h).max(bounds.0[j]);
        let hi = (best[j] + h).min(bounds.1[j]);
        if hi <= lo {
            continue;
        }
        let base = best.clone();
        let (x, v) = golden_max(
            |x| {
                let mut q = base.clone();
                q[j] = x;
                score(&q)
            },
            lo,
            hi,
            40,
        );
        if v > best_val {
            best[j] = x;
            best_val = v;
        }
    }
    (best, best_val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 60);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn line_search_matches_fedorov_step() {
        // M = I₂, target g gᵀ with d = gᵀg = 5: optimal α = (d−p)/(p(d−1)) = 3/8.
        let m = DMatrix::<f64>::identity(2, 2);
        let g = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let a = &g * g.transpose();
        let alpha = line_search(&[m], &[a], &[1.0]);
        assert!((alpha - 0.375).abs() < 1e-12);
    }
}
