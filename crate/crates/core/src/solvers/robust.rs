use log::{debug, warn};
use nalgebra::DMatrix;

use super::{
    d_values, golden_max, inverse_spd, line_search, log_det, SolverOptions, SolverOutput, Status, TraceRow,
    WorkingDesign,
};
use crate::error::{Error, Result};
use crate::info::{Certificate, InfoSource, LocalModel};
use crate::models::RegressionModel;
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub enum RobustMode {
    /// Maximize Σ π_i log det M(ξ, θ_i).
    Average(Vec<f64>),
    /// Maximize min_i log det M(ξ, θ_i).
    Minimax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSpec {
    pub thetas: Vec<Vec<f64>>,
    pub mode: RobustMode,
}

impl RobustSpec {
    fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::InvalidArgument("empty parameter set".into()));
        }
        if let RobustMode::Average(pi) = &self.mode {
            if pi.len() != self.thetas.len() {
                return Err(Error::DimensionMismatch { expected: self.thetas.len(), got: pi.len() });
            }
            if pi.iter().any(|w| *w < 0.0 || !w.is_finite()) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument("prior weights must lie on the simplex".into()));
            }
        }
        Ok(())
    }
}

/// Robust D-optimal design of a regression model over a finite parameter set.
pub fn robust_solve<M: RegressionModel>(model: &M, spec: &RobustSpec, opts: &SolverOptions) -> Result<SolverOutput> {
    spec.validate()?;
    let locals: Vec<LocalModel<&M>> =
        spec.thetas.iter().map(|t| LocalModel::new(model, t)).collect::<Result<_>>()?;
    let sources: Vec<&dyn InfoSource> = locals.iter().map(|l| l as &dyn InfoSource).collect();
    robust_solve_sources(&sources, &spec.mode, opts)
}

/// Robust design over several information sources.
///
/// Average mode ascends Σ π_i log det M_i along the vertex maximizing Σ π_i d_i(u),
/// with an exact line search; it is certified when that maximum is below p + ε.
/// Minimax mode ascends min_i log det M_i along the vertex maximizing the smallest
/// d_i(u) over the currently worst parameters, with a golden-section step. The
/// running average of the iterates is kept as a candidate answer, and the run stops
/// when the best value improves by less than 1e-9 over `opts.window` iterations.
pub fn robust_solve_sources(sources: &[&dyn InfoSource], mode: &RobustMode, opts: &SolverOptions) -> Result<SolverOutput> {
    opts.validate()?;
    if sources.is_empty() {
        return Err(Error::InvalidArgument("no information sources".into()));
    }
    let p = sources[0].n_params();
    if sources.iter().any(|s| s.n_params() != p) {
        return Err(Error::InvalidArgument("sources disagree on the parameter count".into()));
    }
    let mut work = WorkingDesign::on_grid(&opts.grid, sources)?;
    work.greedy_start(p)?;
    match mode {
        RobustMode::Average(pi) => average(&mut work, pi, p, opts),
        RobustMode::Minimax => minimax(&mut work, p, opts),
    }
}

fn infos(work: &WorkingDesign, p: usize) -> Vec<DMatrix<f64>> {
    (0..work.factors.len()).map(|s| work.info(s, p)).collect()
}

fn inverses(ms: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    ms.iter().map(|m| inverse_spd(m).ok_or(Error::SingularInformation(0.0))).collect()
}

fn outer(f: &DMatrix<f64>) -> DMatrix<f64> {
    f * f.transpose()
}

fn average(work: &mut WorkingDesign, pi: &[f64], p: usize, opts: &SolverOptions) -> Result<SolverOutput> {
    let n = work.grid_len();
    let mut trace = Vec::new();
    let objective = |ms: &[DMatrix<f64>]| ms.iter().zip(pi).map(|(m, w)| w * log_det(m)).sum::<f64>();
    for it in 1..=opts.max_iter {
        let ms = infos(work, p);
        let invs = inverses(&ms)?;
        let dbar = weighted_d(work, &invs, pi, n);
        let (idx, dstar) = par::argmax(&dbar).expect("nonempty grid");
        let value = objective(&ms);
        let row = |step| TraceRow {
            iter: it,
            criterion_value: value,
            max_d: dstar,
            step,
            support_size: work.support_size(),
            point: work.points[idx].clone(),
        };
        if dstar < p as f64 + opts.epsilon {
            trace.push(row(0.0));
            break;
        }
        let targets: Vec<DMatrix<f64>> = work.factors.iter().map(|t| outer(&t[idx])).collect();
        let alpha = line_search(&ms, &targets, pi);
        trace.push(row(alpha));
        if alpha <= 0.0 {
            break;
        }
        work.step_to(idx, alpha);
    }
    work.polish(pi, p, opts.polish_iters);
    let raw = work.measure()?;
    let ms = infos(work, p);
    let invs = inverses(&ms)?;
    let grid_d = weighted_d(work, &invs, pi, n);
    let support_d: Vec<f64> = {
        let all = weighted_d(work, &invs, pi, work.points.len());
        raw.support()
            .iter()
            .map(|u| all[work.points.iter().position(|q| q == u).expect("support point in table")])
            .collect()
    };
    let certificate = Certificate::from_values(p, &opts.grid, &grid_d, raw.support(), support_d, opts.epsilon);
    let status = if certificate.certified { Status::Certified } else { Status::NoProgress };
    if status != Status::Certified {
        warn!("solvers: average design not certified (max d = {:.6})", certificate.max_d);
    }
    Ok(SolverOutput {
        measure: raw.merge_scaled(opts.merge_tol, &opts.grid_scale()).sorted(),
        raw,
        iterations: trace.len(),
        trace,
        certificate: Some(certificate),
        status,
        value: objective(&ms),
        notes: Vec::new(),
    })
}

fn weighted_d(work: &WorkingDesign, invs: &[DMatrix<f64>], pi: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for ((table, inv), w) in work.factors.iter().zip(invs).zip(pi) {
        for (o, d) in out.iter_mut().zip(d_values(inv, &table[..n])) {
            *o += w * d;
        }
    }
    out
}

fn minimax(work: &mut WorkingDesign, p: usize, opts: &SolverOptions) -> Result<SolverOutput> {
    let n = work.grid_len();
    let k = work.factors.len();
    let worst = |ms: &[DMatrix<f64>]| ms.iter().map(log_det).fold(f64::INFINITY, f64::min);
    let mut trace = Vec::new();
    let mut notes = Vec::new();
    let mut avg = vec![0.0; work.weights.len()];
    let mut history: Vec<f64> = Vec::new();
    let mut best = (f64::NEG_INFINITY, work.weights.clone());
    let mut worst_idx: Vec<usize> = Vec::new();
    let mut status = Status::NoProgress;
    for it in 1..=opts.max_iter {
        for (a, w) in avg.iter_mut().zip(&work.weights) {
            *a += (w - *a) / it as f64;
        }
        let ms = infos(work, p);
        let lds: Vec<f64> = ms.iter().map(log_det).collect();
        let value = worst(&ms);
        if value > best.0 {
            best = (value, work.weights.clone());
        }
        history.push(best.0);
        worst_idx.push(par::argmin(&lds).map_or(0, |x| x.0));
        let active: Vec<usize> = (0..k).filter(|&i| lds[i] <= value + 1e-6 * value.abs().max(1.0)).collect();
        let invs = inverses(&ms)?;
        let dmin: Vec<f64> = {
            let per: Vec<Vec<f64>> = active.iter().map(|&i| d_values(&invs[i], &work.factors[i][..n])).collect();
            (0..n).map(|j| per.iter().map(|d| d[j]).fold(f64::INFINITY, f64::min)).collect()
        };
        let (idx, dstar) = par::argmax(&dmin).expect("nonempty grid");
        let targets: Vec<DMatrix<f64>> = work.factors.iter().map(|t| outer(&t[idx])).collect();
        let phi = |alpha: f64| {
            let mixed: Vec<DMatrix<f64>> =
                ms.iter().zip(&targets).map(|(m, a)| m * (1.0 - alpha) + a * alpha).collect();
            worst(&mixed)
        };
        let (mut alpha, v) = golden_max(phi, 0.0, 1.0, 60);
        if v <= value {
            alpha = 0.0;
        }
        trace.push(TraceRow {
            iter: it,
            criterion_value: value,
            max_d: dstar,
            step: alpha,
            support_size: work.support_size(),
            point: work.points[idx].clone(),
        });
        if alpha > 0.0 {
            work.step_to(idx, alpha);
        }
        let w = opts.window.max(2);
        if it > w && history[it - 1] - history[it - 1 - w] <= 1e-9 * history[it - 1].abs().max(1.0) {
            let switches = worst_idx[it - w..].windows(2).filter(|x| x[0] != x[1]).count();
            if switches > w / 2 {
                notes.push(format!("worst-case parameter index oscillated {switches} times in the last {w} iterations"));
            }
            status = Status::Stalled;
            break;
        }
    }
    let avg_value = worst(&(0..k).map(|s| super::weighted_info(&work.factors[s], &avg, p)).collect::<Vec<_>>());
    if avg_value > best.0 {
        notes.push("averaged iterate improves on the best iterate".into());
        best = (avg_value, avg);
    }
    work.weights = best.1;
    if status == Status::NoProgress {
        warn!("solvers: minimax hit max_iter = {}", opts.max_iter);
    }
    debug!("solvers: minimax stopped after {} iterations at {:.6}", trace.len(), best.0);
    let raw = work.measure()?;
    Ok(SolverOutput {
        measure: raw.merge_scaled(opts.merge_tol, &opts.grid_scale()).sorted(),
        raw,
        iterations: trace.len(),
        trace,
        certificate: None,
        status,
        value: best.0,
        notes,
    })
}
