use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{inverse_spd, is_regular, log_det};
use crate::design::{ExactDesign, Point};
use crate::error::{Error, Result};
use crate::info::{InfoSource, LocalModel};
use crate::models::RegressionModel;

#[derive(Debug, Clone)]
pub struct ExchangeOutput {
    pub design: ExactDesign,
    /// Candidate index of each design point.
    pub indices: Vec<usize>,
    /// log det Σ_k g(u_k) g(u_k)ᵀ (unnormalized).
    pub log_det: f64,
    /// Best log det reached by each restart.
    pub restart_values: Vec<f64>,
}

/// Exact D-optimal design of size `n` by pairwise exchange for a regression model.
pub fn exchange_exact<M: RegressionModel>(
    model: &M,
    theta: &[f64],
    n: usize,
    candidates: &[Point],
    restarts: usize,
    seed: u64,
) -> Result<ExchangeOutput> {
    exchange_exact_source(&LocalModel::new(model, theta)?, n, candidates, restarts, seed)
}

/// Exchange algorithm: from a random start of `n` candidates, apply the
/// (design point, candidate) swap with the largest determinant ratio
///
///   det(M − g_i g_iᵀ + g_j g_jᵀ) / det M = (1 + d_j)(1 − d_i) + d_ij²
///
/// until no swap improves. A small ridge is added while the start is singular.
/// Restarts run in parallel, each with its own ChaCha8 stream of `seed`; the best
/// (lowest restart index on ties) is returned. Rank-one sources only.
pub fn exchange_exact_source<S: InfoSource>(
    source: &S,
    n: usize,
    candidates: &[Point],
    restarts: usize,
    seed: u64,
) -> Result<ExchangeOutput> {
    let p = source.n_params();
    if n < p {
        return Err(Error::InfeasibleSize { n, p });
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    let factors = source.factors(candidates)?;
    if factors.iter().any(|f| f.ncols() != 1) {
        return Err(Error::InvalidArgument("exchange needs rank-one information contributions".into()));
    }
    let g: Vec<DVector<f64>> = factors.iter().map(|f| f.column(0).into_owned()).collect();
    let mut all = DMatrix::zeros(p, p);
    for v in &g {
        all += v * v.transpose();
    }
    if !is_regular(&all) {
        return Err(Error::RankDeficientCandidates(p));
    }
    let ridge = 1e-6 * all.trace() / (candidates.len() * p) as f64;
    let runs: Vec<(f64, Vec<usize>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let start: Vec<usize> = (0..n).map(|_| rng.random_range(0..candidates.len())).collect();
            exchange_run(&g, start, p, ridge)
        })
        .collect();
    let restart_values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (best, _) = crate::par::argmax(&restart_values).ok_or(Error::RankDeficientCandidates(p))?;
    let (value, indices) = runs[best].clone();
    if !value.is_finite() {
        return Err(Error::RankDeficientCandidates(p));
    }
    let design = ExactDesign::new(indices.iter().map(|&i| candidates[i].clone()).collect())?;
    Ok(ExchangeOutput { design, indices, log_det: value, restart_values })
}

fn exchange_run(g: &[DVector<f64>], mut design: Vec<usize>, p: usize, ridge: f64) -> (f64, Vec<usize>) {
    let info = |design: &[usize]| {
        let mut m = DMatrix::zeros(p, p);
        for &i in design {
            m += &g[i] * g[i].transpose();
        }
        m
    };
    for _ in 0..100_000 {
        let m = info(&design);
        let m = if is_regular(&m) { m } else { m + DMatrix::identity(p, p) * ridge };
        let Some(minv) = inverse_spd(&m) else { break };
        let v: Vec<DVector<f64>> = g.iter().map(|x| &minv * x).collect();
        let dj: Vec<f64> = g.iter().zip(&v).map(|(x, y)| x.dot(y)).collect();
        let mut best = (1.0 + 1e-10, usize::MAX, usize::MAX);
        for (pos, &i) in design.iter().enumerate() {
            let di = dj[i];
            for j in 0..g.len() {
                if j == i {
                    continue;
                }
                let dij = g[i].dot(&v[j]);
                let ratio = (1.0 + dj[j]) * (1.0 - di) + dij * dij;
                if ratio > best.0 {
                    best = (ratio, pos, j);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        design[best.1] = best.2;
    }
    let m = info(&design);
    let value = if is_regular(&m) { log_det(&m) } else { f64::NEG_INFINITY };
    (value, design)
}
