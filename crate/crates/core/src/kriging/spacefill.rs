use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance;
use crate::design::{DesignSpace, ExactDesign, Point};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceFillMethod {
    Maximin,
    Minimax,
    Lhs,
}

const RESTARTS: u64 = 5;
const TIE: f64 = 1e-12;

/// Smallest pairwise distance (∞ for fewer than two points).
pub fn min_distance(points: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(distance(&points[i], &points[j]));
        }
    }
    best
}

/// Largest distance from a candidate to its nearest design point.
pub fn fill_distance(points: &[Point], candidates: &[Point]) -> f64 {
    candidates
        .iter()
        .map(|c| points.iter().map(|p| distance(c, p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn default_candidates(space: &DesignSpace) -> Vec<Point> {
    let per_dim = ((400f64).powf(1.0 / space.dim() as f64).floor() as usize).max(3) | 1;
    space.grid(per_dim)
}

/// Space-filling design of `n` points. Maximin and minimax pick points from
/// `candidates` (default: the explicit candidate set, or a tensor grid of about
/// 400 points on a box) by greedy construction followed by pairwise swaps, over
/// seeded restarts; `Lhs` draws a Latin hypercube on the bounding box.
pub fn space_fill(
    space: &DesignSpace,
    n: usize,
    method: SpaceFillMethod,
    candidates: Option<&[Point]>,
    seed: u64,
) -> Result<ExactDesign> {
    if n == 0 {
        return Err(Error::InvalidArgument("space-filling design needs n >= 1".into()));
    }
    if method == SpaceFillMethod::Lhs {
        let (lo, hi) = space.bounds();
        return latin_hypercube(&lo, &hi, n, seed);
    }
    let cands: Vec<Point> = match candidates {
        Some(c) => c.to_vec(),
        None => default_candidates(space),
    };
    if cands.len() < n {
        return Err(Error::InsufficientCandidates { needed: n, available: cands.len() });
    }
    if let Some(c) = cands.iter().find(|c| c.len() != space.dim()) {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: c.len() });
    }
    let score = |idx: &[usize]| -> (f64, usize) {
        let pts: Vec<Point> = idx.iter().map(|&i| cands[i].clone()).collect();
        match method {
            SpaceFillMethod::Maximin => {
                let m = min_distance(&pts);
                let ties = count_pairs_at(&pts, m);
                (m, ties)
            }
            _ => {
                let near: Vec<f64> = cands
                    .iter()
                    .map(|c| pts.iter().map(|p| distance(c, p)).fold(f64::INFINITY, f64::min))
                    .collect();
                let m = near.iter().copied().fold(0.0, f64::max);
                let ties = near.iter().filter(|d| **d >= m - TIE * m.max(1.0)).count();
                (-m, ties)
            }
        }
    };
    let mut best: Option<((f64, usize), Vec<usize>)> = None;
    for r in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r);
        let start = greedy(&cands, n, rng.random_range(0..cands.len()));
        let (s, idx) = swap_search(&cands, start, &score);
        if best.as_ref().is_none_or(|(b, _)| better(s, *b)) {
            best = Some((s, idx));
        }
    }
    let (_, idx) = best.expect("at least one restart");
    ExactDesign::new(idx.into_iter().map(|i| cands[i].clone()).collect())
}

fn count_pairs_at(points: &[Point], m: f64) -> usize {
    let mut count = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if distance(&points[i], &points[j]) <= m + TIE * m.max(1.0) {
                count += 1;
            }
        }
    }
    count
}

/// Larger primary score wins; on a tie fewer critical pairs/cells wins.
fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    let tol = TIE * a.0.abs().max(b.0.abs()).max(1.0);
    a.0 > b.0 + tol || (a.0 >= b.0 - tol && a.1 < b.1)
}

fn greedy(cands: &[Point], n: usize, first: usize) -> Vec<usize> {
    let mut idx = vec![first];
    let mut near: Vec<f64> = cands.iter().map(|c| distance(c, &cands[first])).collect();
    while idx.len() < n {
        let masked: Vec<f64> =
            near.iter().enumerate().map(|(i, d)| if idx.contains(&i) { f64::NEG_INFINITY } else { *d }).collect();
        let (next, _) = par::argmax(&masked).expect("enough candidates");
        idx.push(next);
        for (d, c) in near.iter_mut().zip(cands) {
            *d = d.min(distance(c, &cands[next]));
        }
    }
    idx
}

fn swap_search<F>(cands: &[Point], mut idx: Vec<usize>, score: &F) -> ((f64, usize), Vec<usize>)
where
    F: Fn(&[usize]) -> (f64, usize) + Sync,
{
    let mut current = score(&idx);
    loop {
        let mut improved = false;
        for pos in 0..idx.len() {
            let options: Vec<usize> = (0..cands.len()).filter(|j| !idx.contains(j)).collect();
            let scores = par::map(&options, |&j| {
                let mut trial = idx.clone();
                trial[pos] = j;
                score(&trial)
            });
            let mut best: Option<(usize, (f64, usize))> = None;
            for (k, s) in scores.into_iter().enumerate() {
                if better(s, best.map_or(current, |b| b.1)) {
                    best = Some((options[k], s));
                }
            }
            if let Some((j, s)) = best {
                idx[pos] = j;
                current = s;
                improved = true;
            }
        }
        if !improved {
            return (current, idx);
        }
    }
}

/// Seeded Latin hypercube on [lower, upper]: coordinate j of the points takes
/// each value lower_j + k (upper_j − lower_j)/(n − 1), k = 0..n−1, exactly once.
/// For n = 1 the single point is the box centre.
pub fn latin_hypercube(lower: &[f64], upper: &[f64], n: usize, seed: u64) -> Result<ExactDesign> {
    if n == 0 {
        return Err(Error::InvalidArgument("latin hypercube needs n >= 1".into()));
    }
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; lower.len()]; n];
    for (j, (lo, hi)) in lower.iter().zip(upper).enumerate() {
        let levels = crate::design::linspace(*lo, *hi, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (pt, k) in points.iter_mut().zip(perm) {
            pt[j] = levels[k];
        }
    }
    ExactDesign::new(points)
}
