use thiserror::Error;

/// Errors raised by the library. Messages carry the owning module as a prefix.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("design: empty support (no positive weight)")]
    EmptySupport,
    #[error("design: negative weight {0} at index {1}")]
    NegativeWeight(f64, usize),
    #[error("design: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design: {n} trials cannot cover {m} support points")]
    TooFewTrials { n: usize, m: usize },
    #[error("models: integration failure ({0})")]
    IntegrationFailure(String),
    #[error("models: point {0:?} outside the design space")]
    OutOfDomain(Vec<f64>),
    #[error("models: no Hadamard construction for order {0}")]
    UnsupportedOrder(usize),
    #[error("info: singular information matrix (condition {0:.3e})")]
    SingularInformation(f64),
    #[error("info: criterion G needs the owning design measure")]
    NeedsMeasure,
    #[error("solvers: initial design is degenerate")]
    DegenerateInit,
    #[error("solvers: candidates do not span rank {0}")]
    RankDeficientCandidates(usize),
    #[error("solvers: design size {n} is infeasible for {p} parameters")]
    InfeasibleSize { n: usize, p: usize },
    #[error("input_design: noise model vanishes at omega = {0}")]
    NoiseModelZero(f64),
    #[error("input_design: transfer function denominator is not stable")]
    Unstable,
    #[error("kriging: singular covariance matrix ({0})")]
    SingularCovariance(String),
    #[error("kriging: negative mean-squared error {0:.3e} beyond clamp tolerance")]
    NegativeMse(f64),
    #[error("kriging: {needed} points requested from {available} candidates")]
    InsufficientCandidates { needed: usize, available: usize },
    #[error("sim: state blow-up at step {0}")]
    NumericalBlowup(usize),
    #[error("sim: estimating-function denominator {0:.3e} too close to zero")]
    DegenerateDenominator(f64),
    #[error("sim: estimation diverged ({0})")]
    EstimationDivergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
