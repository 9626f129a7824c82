use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "oedkit", version, about = "Optimal experimental design from JSON problem files")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the problem file's options block.
#[derive(Debug, Clone, Default, Args)]
pub struct Global {
    /// Random seed (first seed for multi-seed runs)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Certification tolerance on max d - p
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Iteration budget of the design algorithms
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    /// Grid levels per coordinate
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal design measure with an equivalence certificate
    Design(ProblemArg),
    /// Certify a given design measure
    Certify(ProblemArg),
    /// Round a design measure to an exact design
    Round(ProblemArg),
    /// D-optimal input spectrum
    InputSpectrum(ProblemArg),
    /// Multisine signal realizing a spectrum
    Synthesize(ProblemArg),
    /// Kriging predictions
    Krige(ProblemArg),
    /// Space-filling design
    Spacefill(ProblemArg),
    /// Expected-improvement optimization of a built-in objective
    Ego(ProblemArg),
    /// Seeded simulations
    #[command(subcommand)]
    Simulate(Simulation),
    /// Sequential discrimination between two models
    Discriminate(SeededProblem),
}

#[derive(Debug, Args)]
pub struct ProblemArg {
    /// Problem file (JSON)
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeededProblem {
    /// Problem file (JSON)
    pub problem: PathBuf,
    /// Number of seeds, starting at --seed
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
}

#[derive(Debug, Subcommand)]
pub enum Simulation {
    /// Adaptive input on the line y = θ1 + θ2 u + σε
    LaiWei(LaiWeiArgs),
    /// Self-tuning optimizer of a quadratic response
    Sto(StoArgs),
    /// Nonlinear scalar plant under adaptive feedback
    Nfc(NfcArgs),
    /// Sequential D-optimal design with re-estimation
    Sequential(SeededProblem),
}

#[derive(Debug, Args)]
pub struct LaiWeiArgs {
    /// True parameters (intercept, slope)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,2")]
    pub theta: Vec<f64>,
    /// Gain of the control rule
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
}

#[derive(Debug, Args)]
pub struct StoArgs {
    /// True coefficients of θ0 + θ1 u + θ2 u²
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,-1")]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Exploration weight exponent: α_k = (log k)^(1+δ)
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Drop the exploration term
    #[arg(long)]
    pub certainty_equivalence: bool,
    #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
    pub lower: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    pub upper: f64,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Nfc,
    FceEf,
    Switch,
}

#[derive(Debug, Args)]
pub struct NfcArgs {
    /// True plant parameter
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub theta: f64,
    /// Initial estimate
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    pub theta0: f64,
    /// Feedback gain
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Sampling period
    #[arg(long, default_value_t = 0.01)]
    pub period: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ControllerKind::Nfc)]
    pub controller: ControllerKind,
    /// Switch threshold on the std of the estimating-function estimate
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Switch window in steps
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
}
