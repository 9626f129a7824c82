use log::{debug, warn};

use super::{
    d_values, inverse_spd, line_search, log_det, refine_point, SolverOptions, SolverOutput, Status, StepRule,
    TraceRow, WorkingDesign,
};
use crate::design::DesignMeasure;
use crate::error::{Error, Result};
use crate::info::{quad_form, source_certificate, InfoSource, LocalModel};
use crate::models::RegressionModel;
use crate::par;

/// Vertex-direction D-optimal design for a regression model at `theta`.
pub fn fedorov_wynn<M: RegressionModel>(
    model: &M,
    theta: &[f64],
    opts: &SolverOptions,
    init: Option<&DesignMeasure>,
) -> Result<SolverOutput> {
    fedorov_wynn_source(&LocalModel::new(model, theta)?, opts, init)
}

/// Vertex-direction D-optimal design for any information source.
///
/// Each iteration moves weight α toward the grid point u* maximizing d(u,ξ).
/// With rank-one contributions the Fedorov step is α* = (d* − p)/(p(d* − 1));
/// higher-rank contributions use an exact line search. Iterations stop once
/// d* < p + ε. Without `init`, the start is a greedy nonsingular design.
pub fn fedorov_wynn_source<S: InfoSource>(
    source: &S,
    opts: &SolverOptions,
    init: Option<&DesignMeasure>,
) -> Result<SolverOutput> {
    opts.validate()?;
    let p = source.n_params();
    let sources: [&dyn InfoSource; 1] = [source];
    let mut work = WorkingDesign::on_grid(&opts.grid, &sources)?;
    match init {
        Some(m) => work.load_start(&sources, m, p)?,
        None => work.greedy_start(p)?,
    }
    let mut m = work.info(0, p);
    let mut trace = Vec::new();
    let mut status = Status::NoProgress;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let n = work.grid_len();

    for it in 1..=opts.max_iter {
        let minv = inverse_spd(&m).ok_or(Error::SingularInformation(0.0))?;
        let value = log_det(&m);
        let d = d_values(&minv, &work.factors[0][..n]);
        let (mut idx, mut dstar) = par::argmax(&d).ok_or(Error::InvalidArgument("no finite d".into()))?;
        if let Some(bounds) = &opts.refine {
            let (u, v) = refine_point(&work.points[idx], &opts.grid, bounds, |u| {
                source.factor(u).map(|f| quad_form(&minv, &f)).unwrap_or(f64::NEG_INFINITY)
            });
            if v > dstar {
                idx = work.locate(&u, &sources)?;
                dstar = v;
            }
        }
        if opts.step == StepRule::Wynn && best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, work.weights.clone()));
        }
        let support_size = work.support_size();
        let point = work.points[idx].clone();
        if dstar < p as f64 + opts.epsilon {
            trace.push(TraceRow { iter: it, criterion_value: value, max_d: dstar, step: 0.0, support_size, point });
            status = Status::Certified;
            break;
        }
        let f = &work.factors[0][idx];
        let alpha = match opts.step {
            StepRule::Wynn => 1.0 / ((it - 1 + opts.wynn_start) as f64 + 1.0),
            StepRule::Fedorov if f.ncols() == 1 => (dstar - p as f64) / (p as f64 * (dstar - 1.0)),
            StepRule::Fedorov => line_search(&[m.clone()], &[f * f.transpose()], &[1.0]),
        };
        trace.push(TraceRow { iter: it, criterion_value: value, max_d: dstar, step: alpha, support_size, point });
        m = &m * (1.0 - alpha) + (f * f.transpose()) * alpha;
        work.step_to(idx, alpha);
    }
    if status != Status::Certified {
        warn!("solvers: fedorov_wynn hit max_iter = {} without certificate", opts.max_iter);
        if let Some((b, w)) = best {
            if b > log_det(&work.info(0, p)) {
                work.weights = w;
            }
        }
    }
    debug!("solvers: fedorov_wynn stopped after {} iterations", trace.len());
    finish(source, &mut work, opts, trace, p)
}

/// Polish, certify and merge the final iterate.
pub(super) fn finish<S: InfoSource>(
    source: &S,
    work: &mut WorkingDesign,
    opts: &SolverOptions,
    trace: Vec<TraceRow>,
    p: usize,
) -> Result<SolverOutput> {
    work.polish(&[1.0], p, opts.polish_iters);
    let raw = work.measure()?;
    let certificate = source_certificate(source, &raw, &opts.grid, opts.epsilon)?;
    let status = if certificate.certified { Status::Certified } else { Status::NoProgress };
    let value = log_det(&work.info(0, p));
    let measure = raw.merge_scaled(opts.merge_tol, &opts.grid_scale()).sorted();
    Ok(SolverOutput {
        measure,
        raw,
        iterations: trace.len(),
        trace,
        certificate: Some(certificate),
        status,
        value,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{linspace, Point};
    use crate::models::LinearModel;

    fn grid(n: usize) -> Vec<Point> {
        linspace(-1.0, 1.0, n).into_iter().map(|x| vec![x]).collect()
    }

    #[test]
    fn straight_line_on_interval() {
        let out = fedorov_wynn(&LinearModel::polynomial(1), &[0.0, 0.0], &SolverOptions::new(grid(101)), None).unwrap();
        assert!(out.certified());
        assert_eq!(out.measure.len(), 2);
        assert_eq!(out.measure.support(), &[vec![-1.0], vec![1.0]]);
        for w in out.measure.weights() {
            assert!((w - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn fedorov_steps_within_bounds() {
        let opts = SolverOptions::new(grid(41));
        let init = DesignMeasure::uniform(vec![vec![-0.5], vec![0.0], vec![0.7]]).unwrap();
        let out = fedorov_wynn(&LinearModel::polynomial(2), &[0.0; 3], &opts, Some(&init)).unwrap();
        assert!(out.certified());
        for row in &out.trace[..out.trace.len() - 1] {
            assert!(row.step > 0.0 && row.step < 1.0 / 3.0);
        }
        for w in out.trace.windows(2) {
            assert!(w[1].criterion_value >= w[0].criterion_value - 1e-12);
        }
    }

    #[test]
    fn degenerate_start_rejected() {
        let opts = SolverOptions::new(grid(11));
        let init = DesignMeasure::dirac(vec![0.0]);
        let r = fedorov_wynn(&LinearModel::polynomial(1), &[0.0, 0.0], &opts, Some(&init));
        assert_eq!(r.unwrap_err(), Error::DegenerateInit);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let mut opts = SolverOptions::new(grid(41));
        opts.max_iter = 3;
        opts.epsilon = 1e-9;
        opts.polish_iters = 0;
        let init = DesignMeasure::uniform(vec![vec![-0.5], vec![0.0], vec![0.5]]).unwrap();
        let out = fedorov_wynn(&LinearModel::polynomial(2), &[0.0; 3], &opts, Some(&init)).unwrap();
        assert_eq!(out.status, Status::NoProgress);
        assert!(!out.certificate.unwrap().certified);
    }

    #[test]
    fn wynn_rule_converges_slowly_but_certifies() {
        let mut opts = SolverOptions::new(grid(21));
        opts.step = StepRule::Wynn;
        opts.epsilon = 1e-2;
        let out = fedorov_wynn(&LinearModel::polynomial(1), &[0.0, 0.0], &opts, None).unwrap();
        assert!(out.certified());
        assert!((out.trace[0].step - 0.5).abs() < 1e-15 || out.trace[0].step == 0.0);
    }
}
