//! Seeded simulations of adaptive estimation, control and sequential design loops.
//!
//! Noise is i.i.d. standard normal drawn with the ziggurat sampler of `rand_distr`
//! from a ChaCha8 stream seeded by the run seed, so traces are reproducible
//! across platforms.

mod estimation;
mod lai_wei;
mod nfc;
mod sequential;
mod sto;

pub use estimation::{gauss_newton, LsFit};
pub use lai_wei::simulate_lai_wei;
pub use nfc::{ef_estimate, simulate_nfc, Controller, ScalarPlant};
pub use sequential::{discriminate_sequential, sequential_design};
pub use sto::{simulate_sto, Exploration};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;

/// Column-oriented record of a simulation: one row per step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Flagged events (singular estimates, fallbacks, mode switches).
    pub notes: Vec<String>,
    /// Set when the run stopped early; `rows` then holds the partial trace.
    #[serde(skip)]
    pub failure: Option<Error>,
}

impl SimTrace {
    fn new(columns: &[&str]) -> Self {
        SimTrace { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), notes: Vec::new(), failure: None }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a named series (empty if the name is unknown).
    pub fn column(&self, name: &str) -> Vec<f64> {
        match self.column_index(name) {
            Some(j) => self.rows.iter().map(|r| r[j]).collect(),
            None => Vec::new(),
        }
    }

    /// Last value of a named series.
    pub fn last(&self, name: &str) -> Option<f64> {
        let j = self.column_index(name)?;
        self.rows.last().map(|r| r[j])
    }
}

/// Seeded standard-normal source.
pub struct Noise {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl Noise {
    pub fn new(seed: u64, sigma: f64) -> Self {
        Noise { rng: ChaCha8Rng::seed_from_u64(seed), sigma }
    }

    /// σ·ε with ε ~ N(0, 1). A draw is consumed even when σ = 0.
    pub fn draw(&mut self) -> f64 {
        let e: f64 = StandardNormal.sample(&mut self.rng);
        self.sigma * e
    }
}

/// Run `f` for each seed in parallel, results in seed order.
pub fn replicate<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    seeds.par_iter().map(|s| f(*s)).collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
