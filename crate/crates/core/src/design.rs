//! Design points, design spaces, approximate design measures and exact designs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the experimental domain.
pub type Point = Vec<f64>;

/// Relative weight below which a support point is dropped during normalization.
pub const PRUNE_WEIGHT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSpace {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Candidates(Vec<Point>),
}

impl DesignSpace {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument("empty box bounds".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::InvalidArgument("box bounds must be finite with lower <= upper".into()));
        }
        Ok(DesignSpace::Box { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(vec![lower], vec![upper])
    }

    pub fn candidates(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::InvalidArgument("empty candidate set".into()))?;
        check_points(&points, first.len())?;
        Ok(DesignSpace::Candidates(points))
    }

    pub fn dim(&self) -> usize {
        match self {
            DesignSpace::Box { lower, .. } => lower.len(),
            DesignSpace::Candidates(pts) => pts[0].len(),
        }
    }

    /// Componentwise bounding box of the space.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DesignSpace::Box { lower, upper } => (lower.clone(), upper.clone()),
            DesignSpace::Candidates(pts) => {
                let d = pts[0].len();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in pts {
                    for j in 0..d {
                        lo[j] = lo[j].min(p[j]);
                        hi[j] = hi[j].max(p[j]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            DesignSpace::Box { lower, upper } => {
                u.len() == lower.len()
                    && u.iter().zip(lower.iter().zip(upper)).all(|(x, (l, h))| *x >= *l && *x <= *h)
            }
            DesignSpace::Candidates(pts) => pts.iter().any(|p| p.as_slice() == u),
        }
    }

    /// Candidate grid: the explicit set, or a tensor grid with `per_dim` levels per coordinate.
    pub fn grid(&self, per_dim: usize) -> Vec<Point> {
        match self {
            DesignSpace::Candidates(pts) => pts.clone(),
            DesignSpace::Box { lower, upper } => {
                let axes: Vec<Vec<f64>> =
                    lower.iter().zip(upper).map(|(l, h)| linspace(*l, *h, per_dim)).collect();
                tensor_grid(&axes)
            }
        }
    }

    /// Per-coordinate extent, with zero-width coordinates mapped to 1.
    pub fn scale(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(l, h)| if h > l { h - l } else { 1.0 }).collect()
    }
}

/// `n` equally spaced values from `a` to `b` inclusive (the midpoint when `n == 1`).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Values `a, a+step, ...` up to `b` (inclusive within a small tolerance).
pub fn arange(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// Cartesian product of axes, last coordinate varying fastest.
pub fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Point> {
    let mut out: Vec<Point> = vec![vec![]];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for p in &out {
            for &x in axis {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn check_points(points: &[Point], dim: usize) -> Result<()> {
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite design point {p:?}")));
        }
    }
    Ok(())
}

/// A finitely supported probability measure on the design space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DesignMeasure {
    support: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure {
    support: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DesignMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        DesignMeasure::new(raw.support, raw.weights)
    }
}

impl DesignMeasure {
    /// Normalizes the weights, drops negligible ones and combines identical points.
    pub fn new(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: weights.len() });
        }
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        check_points(&support, support[0].len())?;
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::NegativeWeight(w, i));
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let mut pts = Vec::with_capacity(support.len());
        let mut ws = Vec::with_capacity(support.len());
        for (p, w) in support.into_iter().zip(weights) {
            let w = w / total;
            if w < PRUNE_WEIGHT {
                continue;
            }
            if let Some(j) = pts.iter().position(|q: &Point| *q == p) {
                ws[j] += w;
            } else {
                pts.push(p);
                ws.push(w);
            }
        }
        if pts.is_empty() {
            return Err(Error::EmptySupport);
        }
        normalize(&mut ws);
        Ok(DesignMeasure { support: pts, weights: ws })
    }

    /// Equal weights on the given points.
    pub fn uniform(support: Vec<Point>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0; n])
    }

    pub fn dirac(point: Point) -> Self {
        DesignMeasure { support: vec![point], weights: vec![1.0] }
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }

    /// Merge points closer than `tol` (Euclidean), transitively, into weighted centroids.
    pub fn merge_support(&self, tol: f64) -> DesignMeasure {
        self.merge_scaled(tol, &vec![1.0; self.dim()])
    }

    /// Same as [`merge_support`](Self::merge_support) with coordinate `j` divided by `scale[j]`.
    pub fn merge_scaled(&self, tol: f64, scale: &[f64]) -> DesignMeasure {
        let m = self.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let dist2: f64 = self.support[i]
                    .iter()
                    .zip(&self.support[j])
                    .zip(scale)
                    .map(|((a, b), s)| ((a - b) / s).powi(2))
                    .sum();
                if dist2.sqrt() <= tol {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut sums: Vec<(Point, f64)> = Vec::new();
        for i in 0..m {
            let r = find(&mut parent, i);
            let k = match roots.iter().position(|&x| x == r) {
                Some(k) => k,
                None => {
                    roots.push(r);
                    sums.push((vec![0.0; self.dim()], 0.0));
                    sums.len() - 1
                }
            };
            let w = self.weights[i];
            for (acc, x) in sums[k].0.iter_mut().zip(&self.support[i]) {
                *acc += w * x;
            }
            sums[k].1 += w;
        }
        let (support, weights): (Vec<Point>, Vec<f64>) = sums
            .into_iter()
            .map(|(s, w)| (s.into_iter().map(|x| x / w).collect(), w))
            .unzip();
        DesignMeasure { support, weights }
    }

    /// Support sorted lexicographically by coordinates.
    pub fn sorted(&self) -> DesignMeasure {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.support[a]
                .iter()
                .zip(&self.support[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        DesignMeasure {
            support: idx.iter().map(|&i| self.support[i].clone()).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn round_to_exact(&self, n: usize) -> Result<ExactDesign> {
        let counts = apportion(&self.weights, n)?;
        let points = self
            .support
            .iter()
            .zip(&counts)
            .flat_map(|(p, &c)| std::iter::repeat_n(p.clone(), c))
            .collect();
        ExactDesign::new(points)
    }
}

fn normalize(ws: &mut [f64]) {
    let s: f64 = ws.iter().sum();
    for w in ws.iter_mut() {
        *w /= s;
    }
}

/// Efficient apportionment of `n` trials to weights, each count at least 1.
pub fn apportion(weights: &[f64], n: usize) -> Result<Vec<usize>> {
    let m = weights.len();
    if m == 0 {
        return Err(Error::EmptySupport);
    }
    if n < m {
        return Err(Error::TooFewTrials { n, m });
    }
    let scale = n as f64 - m as f64 / 2.0;
    let mut r: Vec<usize> = weights.iter().map(|w| ((w * scale).ceil() as usize).max(1)).collect();
    let ratio = |r: usize, w: f64| r as f64 / w;
    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let mut total: usize = r.iter().sum();
    while total > n {
        let mut best: Option<usize> = None;
        for i in 0..m {
            if r[i] <= 1 {
                continue;
            }
            let v = ratio(r[i], weights[i]);
            best = match best {
                None => Some(i),
                Some(b) => {
                    let vb = ratio(r[b], weights[b]);
                    if v > vb || tie(v, vb) { Some(i) } else { Some(b) }
                }
            };
        }
        let i = best.expect("n >= m leaves a decrementable count");
        r[i] -= 1;
        total -= 1;
    }
    while total < n {
        let mut best = 0;
        for i in 1..m {
            let (v, vb) = (ratio(r[i], weights[i]), ratio(r[best], weights[best]));
            if v < vb && !tie(v, vb) {
                best = i;
            }
        }
        r[best] += 1;
        total += 1;
    }
    Ok(r)
}

/// An exact design: N points, repetitions allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExact")]
pub struct ExactDesign {
    points: Vec<Point>,
}

#[derive(Deserialize)]
struct RawExact {
    points: Vec<Point>,
}

impl TryFrom<RawExact> for ExactDesign {
    type Error = Error;
    fn try_from(raw: RawExact) -> Result<Self> {
        ExactDesign::new(raw.points)
    }
}

impl ExactDesign {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySupport)?;
        check_points(&points, first.len())?;
        Ok(ExactDesign { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn check_within(&self, space: &DesignSpace) -> Result<()> {
        match self.points.iter().find(|p| !space.contains(p)) {
            Some(p) => Err(Error::OutOfDomain(p.clone())),
            None => Ok(()),
        }
    }

    /// Empirical measure: weight k/N on a point repeated k times.
    pub fn to_measure(&self) -> DesignMeasure {
        DesignMeasure::uniform(self.points.clone()).expect("nonempty exact design")
    }

    /// Multiplicity of each distinct point in order of first appearance.
    pub fn counts(&self) -> Vec<(Point, usize)> {
        let mut out: Vec<(Point, usize)> = Vec::new();
        for p in &self.points {
            match out.iter_mut().find(|(q, _)| q == p) {
                Some((_, c)) => *c += 1,
                None => out.push((p.clone(), 1)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn normalizes_weights() {
        let m = DesignMeasure::new(pts(&[-1.0, 0.0, 1.0]), vec![1.0, 1.0, 1.0]).unwrap();
        for w in m.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        let m = DesignMeasure::new(pts(&[5.0]), vec![2.0]).unwrap();
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(
            DesignMeasure::new(pts(&[0.0, 1.0]), vec![1.0, -0.1]),
            Err(Error::NegativeWeight(_, 1))
        ));
        assert_eq!(DesignMeasure::new(pts(&[0.0]), vec![0.0]), Err(Error::EmptySupport));
        assert!(matches!(
            DesignMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_weights_dropped() {
        let m = DesignMeasure::new(pts(&[0.0, 1.0, 2.0]), vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(m.support(), &pts(&[0.0, 2.0])[..]);
    }

    #[test]
    fn merge_examples() {
        let m = DesignMeasure::new(pts(&[1.0, 1.01]), vec![0.5, 0.5]).unwrap().merge_support(0.05);
        assert_eq!(m.len(), 1);
        assert!((m.support()[0][0] - 1.005).abs() < 1e-12);
        assert_eq!(m.weights(), &[1.0]);

        let m0 = DesignMeasure::new(pts(&[0.0, 10.0]), vec![0.5, 0.5]).unwrap();
        assert_eq!(m0.merge_support(0.05), m0);

        let chain = DesignMeasure::uniform(pts(&[0.0, 0.04, 0.08])).unwrap().merge_support(0.05);
        assert_eq!(chain.len(), 1);
        assert!((chain.support()[0][0] - 0.04).abs() < 1e-12);
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(&[0.5, 0.5], 8).unwrap(), vec![4, 4]);
        assert_eq!(apportion(&[0.25; 4], 8).unwrap(), vec![2, 2, 2, 2]);
        let third = 1.0 / 3.0;
        assert_eq!(apportion(&[third; 3], 5).unwrap(), vec![2, 2, 1]);
        assert_eq!(apportion(&[0.5, 0.5], 1), Err(Error::TooFewTrials { n: 1, m: 2 }));
    }

    #[test]
    fn round_duplicates_schedule() {
        let m = DesignMeasure::uniform(pts(&[1.0, 10.0, 74.0, 720.0])).unwrap();
        let e = m.round_to_exact(8).unwrap();
        let times: Vec<f64> = e.points().iter().map(|p| p[0]).collect();
        assert_eq!(times, vec![1.0, 1.0, 10.0, 10.0, 74.0, 74.0, 720.0, 720.0]);
    }

    #[test]
    fn json_field_names() {
        let m = DesignMeasure::new(pts(&[0.0, 1.0]), vec![1.0, 3.0]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"support":[[0.0],[1.0]],"weights":[0.25,0.75]}"#);
        let back: DesignMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let e = ExactDesign::new(pts(&[2.0, 2.0])).unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"points":[[2.0],[2.0]]}"#);
        assert!(serde_json::from_str::<DesignMeasure>(r#"{"support":[[0]],"weights":[-1]}"#).is_err());
    }

    #[test]
    fn grids() {
        let s = DesignSpace::boxed(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let g = s.grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[5], vec![0.5, 2.0]);
        assert_eq!(arange(1.0, 720.0, 1.0).len(), 720);
    }
}
