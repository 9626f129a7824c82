use log::warn;

use super::{d_values, inverse_spd, log_det, SolverOutput, Status, TraceRow, WorkingDesign};
use crate::design::{Point, PRUNE_WEIGHT};
use crate::error::{Error, Result};
use crate::info::{source_certificate, InfoSource, LocalModel};
use crate::models::RegressionModel;

/// One multiplicative step λ_i ← λ_i d_i / p, without pruning.
pub fn multiplicative_update(weights: &[f64], d: &[f64], p: usize) -> Vec<f64> {
    weights.iter().zip(d).map(|(w, d)| w * d / p as f64).collect()
}

/// Multiplicative D-optimal weights on a finite grid for a regression model.
pub fn multiplicative_solve<M: RegressionModel>(
    model: &M,
    theta: &[f64],
    grid: &[Point],
    max_iter: usize,
    epsilon: f64,
) -> Result<SolverOutput> {
    multiplicative_solve_source(&LocalModel::new(model, theta)?, grid, max_iter, epsilon)
}

/// Multiplicative D-optimal weights for any information source, from uniform weights.
/// Weights under 1e-10 are pruned each sweep; the output keeps the raw grid support
/// (merging is left to the caller).
pub fn multiplicative_solve_source<S: InfoSource>(
    source: &S,
    grid: &[Point],
    max_iter: usize,
    epsilon: f64,
) -> Result<SolverOutput> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty candidate grid".into()));
    }
    let p = source.n_params();
    let sources: [&dyn InfoSource; 1] = [source];
    let mut work = WorkingDesign::on_grid(grid, &sources)?;
    work.weights = vec![1.0 / grid.len() as f64; grid.len()];
    let mut trace = Vec::new();
    let mut drift: f64 = 0.0;
    let mut done = false;
    for it in 1..=max_iter {
        let m = work.info(0, p);
        if !super::is_regular(&m) {
            return Err(Error::SingularInformation(crate::info::InfoMatrix::from_raw(m).condition_ratio()));
        }
        let minv = inverse_spd(&m).ok_or(Error::SingularInformation(0.0))?;
        let d = d_values(&minv, &work.factors[0]);
        let (imax, dmax) = crate::par::argmax(&d).expect("nonempty grid");
        let value = log_det(&m);
        let support_size = work.support_size();
        if dmax < p as f64 + epsilon {
            trace.push(TraceRow { iter: it, criterion_value: value, max_d: dmax, step: 0.0, support_size, point: grid[imax].clone() });
            done = true;
            break;
        }
        let mut next = multiplicative_update(&work.weights, &d, p);
        let total: f64 = next.iter().sum();
        drift = drift.max((total - 1.0).abs());
        for w in next.iter_mut() {
            if *w < PRUNE_WEIGHT {
                *w = 0.0;
            }
        }
        let kept: f64 = next.iter().sum();
        for w in next.iter_mut() {
            *w /= kept;
        }
        let step: f64 = next.iter().zip(&work.weights).map(|(a, b)| (a - b).abs()).sum();
        work.weights = next;
        trace.push(TraceRow { iter: it, criterion_value: value, max_d: dmax, step, support_size, point: grid[imax].clone() });
    }
    if !done {
        warn!("solvers: multiplicative_solve hit max_iter = {max_iter} without certificate");
    }
    let raw = work.measure()?;
    let certificate = source_certificate(source, &raw, grid, epsilon)?;
    let status = if certificate.certified { Status::Certified } else { Status::NoProgress };
    Ok(SolverOutput {
        measure: raw.sorted(),
        value: log_det(&work.info(0, p)),
        raw,
        iterations: trace.len(),
        trace,
        certificate: Some(certificate),
        status,
        notes: vec![format!("max simplex drift before renormalization: {drift:.3e}")],
    })
}
