//! Problem files: a JSON object with `model`, `task` and `options` blocks.
//!
//! Parsing walks the raw JSON and collects every validation error with its path
//! before giving up. Defaults are filled in, so serializing a parsed spec gives
//! the normalized form of the input.

use oedkit::design::{arange, tensor_grid, DesignMeasure, DesignSpace, Point};
use oedkit::input_design::{InputModel, RationalTF, Spectrum};
use oedkit::kriging::{Kernel, KernelFamily, KrigingData, SpaceFillMethod};
use oedkit::models::{CompartmentModel, ExponentialDecay, InfusionSegment, LinearModel, DEFAULT_STEP};
use oedkit::RegressionModel;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::ParseError;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 200_000;
pub const DEFAULT_LEVELS: usize = 101;
pub const DEFAULT_MERGE_TOL: f64 = 1e-3;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    pub task: TaskSpec,
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<Space>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// (1, u, ..., u^degree)
    Polynomial { degree: usize },
    /// (1, u_1, ..., u_factors)
    Linear { factors: usize },
    /// (u_1, ..., u_factors), no intercept.
    Weighing { factors: usize },
    Exponential,
    /// Infusion profile as (start, end, rate) triples.
    Compartment { input: Vec<[f64; 3]>, step: f64 },
    Fir { taps: usize },
    Transfer { nb: usize, na: usize, noise: RationalTF, sigma2: f64 },
    Kriging { family: KernelFamily, lengthscale: f64, process_var: f64, noise_var: f64 },
}

const MODEL_KINDS: &str = "polynomial, linear, weighing, exponential, compartment, fir, transfer, kriging";

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Polynomial { .. } => "polynomial",
            ModelKind::Linear { .. } => "linear",
            ModelKind::Weighing { .. } => "weighing",
            ModelKind::Exponential => "exponential",
            ModelKind::Compartment { .. } => "compartment",
            ModelKind::Fir { .. } => "fir",
            ModelKind::Transfer { .. } => "transfer",
            ModelKind::Kriging { .. } => "kriging",
        }
    }

    /// Number of parameters (none for Kriging).
    pub fn n_params(&self) -> Option<usize> {
        match self {
            ModelKind::Polynomial { degree } => Some(degree + 1),
            ModelKind::Linear { factors } => Some(factors + 1),
            ModelKind::Weighing { factors } => Some(*factors),
            ModelKind::Exponential => Some(1),
            ModelKind::Compartment { .. } => Some(4),
            ModelKind::Fir { taps } => Some(*taps),
            ModelKind::Transfer { nb, na, .. } => Some(nb + na),
            ModelKind::Kriging { .. } => None,
        }
    }

    /// Dimension of a design point, for kinds where it is fixed.
    fn dim(&self) -> Option<usize> {
        match self {
            ModelKind::Polynomial { .. } | ModelKind::Exponential | ModelKind::Compartment { .. } => Some(1),
            ModelKind::Linear { factors } | ModelKind::Weighing { factors } => Some(*factors),
            _ => None,
        }
    }

    pub fn is_regression(&self) -> bool {
        matches!(
            self,
            ModelKind::Polynomial { .. }
                | ModelKind::Linear { .. }
                | ModelKind::Weighing { .. }
                | ModelKind::Exponential
                | ModelKind::Compartment { .. }
        )
    }

    fn is_frequency(&self) -> bool {
        matches!(self, ModelKind::Fir { .. } | ModelKind::Transfer { .. })
    }

    /// Default parameter vector, when the kind has a natural one.
    fn default_theta(&self) -> Option<Vec<f64>> {
        match self {
            ModelKind::Polynomial { .. } | ModelKind::Linear { .. } | ModelKind::Weighing { .. } | ModelKind::Fir { .. } => {
                Some(vec![0.0; self.n_params()?])
            }
            ModelKind::Compartment { .. } => Some(CompartmentModel::NOMINAL_THETA.to_vec()),
            ModelKind::Kriging { .. } => Some(Vec::new()),
            _ => None,
        }
    }
}

impl ModelSpec {
    pub fn regression(&self) -> oedkit::Result<Box<dyn RegressionModel>> {
        Ok(match &self.kind {
            ModelKind::Polynomial { degree } => Box::new(LinearModel::polynomial(*degree)),
            ModelKind::Linear { factors } => {
                let p = factors + 1;
                Box::new(LinearModel::custom(p, *factors, move |u| {
                    let mut r = Vec::with_capacity(p);
                    r.push(1.0);
                    r.extend_from_slice(u);
                    r
                }))
            }
            ModelKind::Weighing { factors } => Box::new(LinearModel::identity(*factors)),
            ModelKind::Exponential => Box::new(ExponentialDecay),
            ModelKind::Compartment { input, step } => Box::new(compartment(input, *step)?),
            other => {
                return Err(oedkit::Error::InvalidArgument(format!("{} is not a regression model", other.name())))
            }
        })
    }

    pub fn input_model(&self) -> oedkit::Result<InputModel> {
        match &self.kind {
            ModelKind::Fir { taps } => InputModel::fir(*taps),
            ModelKind::Transfer { nb, na, noise, sigma2 } => InputModel::new(*nb, *na, noise.clone(), *sigma2),
            other => Err(oedkit::Error::InvalidArgument(format!("{} is not a frequency-domain model", other.name()))),
        }
    }

    pub fn kernel(&self) -> oedkit::Result<Kernel> {
        match &self.kind {
            ModelKind::Kriging { family, lengthscale, process_var, noise_var } => {
                Kernel::new(*family, *lengthscale, *process_var, *noise_var)
            }
            other => Err(oedkit::Error::InvalidArgument(format!("{} is not a kriging model", other.name()))),
        }
    }
}

fn compartment(input: &[[f64; 3]], step: f64) -> oedkit::Result<CompartmentModel> {
    let segments: Vec<InfusionSegment> =
        input.iter().map(|[start, end, rate]| InfusionSegment { start: *start, end: *end, rate: *rate }).collect();
    CompartmentModel::new(&segments, step)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Space {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Candidates { candidates: Vec<Point> },
}

impl Space {
    pub fn design_space(&self) -> oedkit::Result<DesignSpace> {
        match self {
            Space::Box { lower, upper } => DesignSpace::boxed(lower.clone(), upper.clone()),
            Space::Candidates { candidates } => DesignSpace::candidates(candidates.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Box { lower, .. } => lower.len(),
            Space::Candidates { candidates } => candidates[0].len(),
        }
    }
}

/// Inline value or a path to a file holding it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Source<T> {
    Inline(T),
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fedorov,
    Wynn,
    Multiplicative,
    Exchange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Robust {
    Average { thetas: Vec<Vec<f64>>, weights: Vec<f64> },
    Minimax { thetas: Vec<Vec<f64>> },
}

impl Robust {
    pub fn thetas(&self) -> &[Vec<f64>] {
        match self {
            Robust::Average { thetas, .. } | Robust::Minimax { thetas } => thetas,
        }
    }
}

/// Built-in objectives for `ego`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Σ_j sin(frequency·u_j) + slope·u_j
    Sine { frequency: f64, slope: f64 },
    /// −‖u − center‖²
    Quadratic { center: Vec<f64> },
}

impl Objective {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Objective::Sine { frequency, slope } => u.iter().map(|x| (frequency * x).sin() + slope * x).sum(),
            Objective::Quadratic { center } => -u.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskSpec {
    Design {
        method: Method,
        /// Also round the measure to `n` trials; the exact size for `exchange`.
        #[serde(skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        restarts: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        robust: Option<Robust>,
    },
    Certify {
        measure: Source<DesignMeasure>,
    },
    Round {
        measure: Source<DesignMeasure>,
        n: usize,
    },
    InputSpectrum {
        total_power: f64,
    },
    Synthesize {
        spectrum: Source<Spectrum>,
        samples: usize,
    },
    Krige {
        data: Source<KrigingData>,
        #[serde(skip_serializing_if = "Option::is_none")]
        predict: Option<Vec<Point>>,
        lengthscales: Vec<f64>,
    },
    Spacefill {
        n: usize,
        method: SpaceFillMethod,
    },
    Ego {
        objective: Objective,
        budget: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        n_init: Option<usize>,
        ei_tol: f64,
        lengthscales: Vec<f64>,
    },
    Simulate {
        theta_true: Vec<f64>,
        n: usize,
        sigma: f64,
    },
    Discriminate {
        rival: ModelSpec,
        theta_true: Vec<f64>,
        n: usize,
        sigma: f64,
    },
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Design { .. } => "design",
            TaskSpec::Certify { .. } => "certify",
            TaskSpec::Round { .. } => "round",
            TaskSpec::InputSpectrum { .. } => "input-spectrum",
            TaskSpec::Synthesize { .. } => "synthesize",
            TaskSpec::Krige { .. } => "krige",
            TaskSpec::Spacefill { .. } => "spacefill",
            TaskSpec::Ego { .. } => "ego",
            TaskSpec::Simulate { .. } => "simulate",
            TaskSpec::Discriminate { .. } => "discriminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Grid {
    /// Levels per coordinate.
    Levels(usize),
    /// Spacing per coordinate, starting at the lower bound.
    Step { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Options {
    pub criterion: String,
    pub grid: Grid,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub out: String,
    pub merge_tol: f64,
    /// Write plot data (d over the grid) next to the results.
    pub plot: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            criterion: "D".into(),
            grid: Grid::Levels(DEFAULT_LEVELS),
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            out: DEFAULT_OUT.into(),
            merge_tol: DEFAULT_MERGE_TOL,
            plot: true,
        }
    }
}

impl Grid {
    /// Candidate points on a design space.
    pub fn points(&self, space: &DesignSpace) -> Vec<Point> {
        match (self, space) {
            (_, DesignSpace::Candidates(pts)) => pts.clone(),
            (Grid::Levels(l), _) => space.grid(*l),
            (Grid::Step { step }, DesignSpace::Box { lower, upper }) => {
                let axes: Vec<Vec<f64>> = lower.iter().zip(upper).map(|(l, h)| arange(*l, *h, *step)).collect();
                tensor_grid(&axes)
            }
        }
    }

    /// Frequencies in (0, π].
    pub fn frequencies(&self) -> Vec<f64> {
        use std::f64::consts::PI;
        match self {
            Grid::Levels(l) => oedkit::design::linspace(0.0, PI, l + 1).into_iter().skip(1).collect(),
            Grid::Step { step } => arange(0.0, PI, *step).into_iter().skip(1).collect(),
        }
    }

    /// Levels per coordinate on a box (the first coordinate sets the count for a step grid).
    pub fn levels(&self, space: &DesignSpace) -> usize {
        match self {
            Grid::Levels(l) => *l,
            Grid::Step { step } => {
                let (lo, hi) = space.bounds();
                ((hi[0] - lo[0]) / step + 1e-9).floor() as usize + 1
            }
        }
    }
}

/// Parse and validate a problem file, reporting all errors at once.
pub fn parse_problem(text: &[u8]) -> Result<ProblemSpec, Vec<ParseError>> {
    let root: Value = serde_json::from_slice(text)
        .map_err(|e| vec![ParseError { path: "$".into(), message: format!("invalid JSON: {e}") }])?;
    let mut cx = Checker::default();
    let Some(mut f) = cx.object(&root, "$") else {
        return Err(cx.errors);
    };
    let options = f.optional(&mut cx, "options", Some(Options::default()), options);
    let model = f.maybe(&mut cx, "model", model);
    let task = f.required(&mut cx, "task", task);
    f.finish(&mut cx);
    if let (Some(model), Some(task)) = (&model, &task) {
        cross_check(&mut cx, model.as_ref(), task);
    }
    match (model, task, options) {
        (Some(model), Some(task), Some(options)) if cx.errors.is_empty() => Ok(ProblemSpec { model, task, options }),
        _ => Err(cx.errors),
    }
}

impl ProblemSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes") + "\n"
    }
}

#[derive(Default)]
struct Checker {
    errors: Vec<ParseError>,
}

impl Checker {
    fn fail(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(ParseError { path: path.to_string(), message: message.into() });
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str) -> Option<Fields<'v>> {
        match v.as_object() {
            Some(map) => Some(Fields { map, path: path.to_string(), known: Vec::new() }),
            None => {
                self.fail(path, format!("expected an object, found {}", type_name(v)));
                None
            }
        }
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

type Rule<T> = fn(&mut Checker, &Value, &str) -> Option<T>;

struct Fields<'v> {
    map: &'v Map<String, Value>,
    path: String,
    known: Vec<&'static str>,
}

impl<'v> Fields<'v> {
    fn at(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    fn get(&mut self, key: &'static str) -> Option<&'v Value> {
        self.known.push(key);
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn required<T>(&mut self, cx: &mut Checker, key: &'static str, rule: Rule<T>) -> Option<T> {
        let path = self.at(key);
        match self.get(key) {
            Some(v) => rule(cx, v, &path),
            None => {
                cx.fail(&path, "missing required field");
                None
            }
        }
    }

    /// `default` is `None` when the caller fills the default later.
    fn optional<T>(&mut self, cx: &mut Checker, key: &'static str, default: Option<T>, rule: Rule<T>) -> Option<T> {
        let path = self.at(key);
        match self.get(key) {
            Some(v) => rule(cx, v, &path),
            None => default,
        }
    }

    /// Absent fields give `Some(None)`; invalid ones give `None`.
    fn maybe<T>(&mut self, cx: &mut Checker, key: &'static str, rule: Rule<T>) -> Option<Option<T>> {
        let path = self.at(key);
        match self.get(key) {
            Some(v) => rule(cx, v, &path).map(Some),
            None => Some(None),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.map.get(key).is_some_and(|v| !v.is_null())
    }

    fn finish(self, cx: &mut Checker) {
        for key in self.map.keys() {
            if !self.known.contains(&key.as_str()) {
                cx.fail(&self.at(key), "unknown field");
            }
        }
    }
}

fn number(cx: &mut Checker, v: &Value, path: &str) -> Option<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => {
            cx.fail(path, format!("expected a finite number, found {}", type_name(v)));
            None
        }
    }
}

fn positive(cx: &mut Checker, v: &Value, path: &str) -> Option<f64> {
    let x = number(cx, v, path)?;
    if x > 0.0 {
        Some(x)
    } else {
        cx.fail(path, format!("must be positive, got {x}"));
        None
    }
}

fn nonnegative(cx: &mut Checker, v: &Value, path: &str) -> Option<f64> {
    let x = number(cx, v, path)?;
    if x >= 0.0 {
        Some(x)
    } else {
        cx.fail(path, format!("must be >= 0, got {x}"));
        None
    }
}

fn unsigned(cx: &mut Checker, v: &Value, path: &str) -> Option<u64> {
    match v.as_u64() {
        Some(n) => Some(n),
        None => {
            cx.fail(path, format!("expected a nonnegative integer, found {}", describe(v)));
            None
        }
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Number(n) => n.to_string(),
        _ => type_name(v).to_string(),
    }
}

fn count(cx: &mut Checker, v: &Value, path: &str) -> Option<usize> {
    unsigned(cx, v, path).map(|n| n as usize)
}

fn at_least_one(cx: &mut Checker, v: &Value, path: &str) -> Option<usize> {
    let n = count(cx, v, path)?;
    if n >= 1 {
        Some(n)
    } else {
        cx.fail(path, "must be >= 1");
        None
    }
}

fn string(cx: &mut Checker, v: &Value, path: &str) -> Option<String> {
    match v.as_str() {
        Some(s) => Some(s.to_string()),
        None => {
            cx.fail(path, format!("expected a string, found {}", type_name(v)));
            None
        }
    }
}

fn boolean(cx: &mut Checker, v: &Value, path: &str) -> Option<bool> {
    match v.as_bool() {
        Some(b) => Some(b),
        None => {
            cx.fail(path, format!("expected a boolean, found {}", type_name(v)));
            None
        }
    }
}

fn array<'v>(cx: &mut Checker, v: &'v Value, path: &str) -> Option<&'v Vec<Value>> {
    match v.as_array() {
        Some(a) => Some(a),
        None => {
            cx.fail(path, format!("expected an array, found {}", type_name(v)));
            None
        }
    }
}

fn each<T>(cx: &mut Checker, v: &Value, path: &str, rule: Rule<T>) -> Option<Vec<T>> {
    let items = array(cx, v, path)?;
    let out: Vec<Option<T>> = items.iter().enumerate().map(|(i, x)| rule(cx, x, &format!("{path}[{i}]"))).collect();
    out.into_iter().collect()
}

fn numbers(cx: &mut Checker, v: &Value, path: &str) -> Option<Vec<f64>> {
    each(cx, v, path, number)
}

fn nonempty_numbers(cx: &mut Checker, v: &Value, path: &str) -> Option<Vec<f64>> {
    let xs = numbers(cx, v, path)?;
    if xs.is_empty() {
        cx.fail(path, "must not be empty");
        return None;
    }
    Some(xs)
}

fn positives(cx: &mut Checker, v: &Value, path: &str) -> Option<Vec<f64>> {
    each(cx, v, path, positive)
}

/// Nonempty list of points of one dimension.
fn points(cx: &mut Checker, v: &Value, path: &str) -> Option<Vec<Point>> {
    let pts = each(cx, v, path, nonempty_numbers)?;
    let Some(first) = pts.first() else {
        cx.fail(path, "must not be empty");
        return None;
    };
    let d = first.len();
    if let Some(i) = pts.iter().position(|p| p.len() != d) {
        cx.fail(&format!("{path}[{i}]"), format!("expected {d} coordinates, found {}", pts[i].len()));
        return None;
    }
    Some(pts)
}

fn options(cx: &mut Checker, v: &Value, path: &str) -> Option<Options> {
    let mut f = cx.object(v, path)?;
    let d = Options::default();
    let criterion = f.optional(cx, "criterion", Some(d.criterion), criterion);
    let grid = f.optional(cx, "grid", Some(d.grid), grid);
    let epsilon = f.optional(cx, "epsilon", Some(d.epsilon), positive);
    let max_iter = f.optional(cx, "max_iter", Some(d.max_iter), at_least_one);
    let seed = f.optional(cx, "seed", Some(d.seed), unsigned);
    let out = f.optional(cx, "out", Some(d.out), string);
    let merge_tol = f.optional(cx, "merge_tol", Some(d.merge_tol), nonnegative);
    let plot = f.optional(cx, "plot", Some(d.plot), boolean);
    f.finish(cx);
    Some(Options {
        criterion: criterion?,
        grid: grid?,
        epsilon: epsilon?,
        max_iter: max_iter?,
        seed: seed?,
        out: out?,
        merge_tol: merge_tol?,
        plot: plot?,
    })
}

fn criterion(cx: &mut Checker, v: &Value, path: &str) -> Option<String> {
    let s = string(cx, v, path)?;
    if s == "D" {
        Some(s)
    } else {
        cx.fail(path, format!("unsupported criterion \"{s}\" (the design algorithms optimize D)"));
        None
    }
}

fn grid(cx: &mut Checker, v: &Value, path: &str) -> Option<Grid> {
    if v.is_object() {
        let mut f = cx.object(v, path)?;
        let step = f.required(cx, "step", positive);
        f.finish(cx);
        return Some(Grid::Step { step: step? });
    }
    let n = count(cx, v, path)?;
    if n < 2 {
        cx.fail(path, "need at least 2 levels");
        return None;
    }
    Some(Grid::Levels(n))
}

fn model(cx: &mut Checker, v: &Value, path: &str) -> Option<ModelSpec> {
    let mut f = cx.object(v, path)?;
    let kind = f.required(cx, "kind", string);
    let kind = kind.and_then(|k| model_kind(cx, &mut f, &k));
    let theta = f.maybe(cx, "theta", numbers);
    let space = f.maybe(cx, "space", space);
    let theta_path = f.at("theta");
    let space_path = f.at("space");
    f.finish(cx);
    let (kind, theta, space) = (kind?, theta?, space?);
    let theta = match (theta, kind.default_theta()) {
        (Some(t), _) => t,
        (None, Some(t)) => t,
        (None, None) => {
            cx.fail(&theta_path, format!("required for model kind {}", kind.name()));
            return None;
        }
    };
    match kind.n_params() {
        Some(p) if theta.len() != p => {
            cx.fail(&theta_path, format!("expected {p} parameters for model kind {}, found {}", kind.name(), theta.len()));
        }
        None if !theta.is_empty() => cx.fail(&theta_path, "kriging models take no parameter vector"),
        _ => {}
    }
    if let Some(s) = &space {
        if kind.is_frequency() {
            cx.fail(&space_path, "frequency-domain models use the grid on (0, pi]; remove the space");
        } else if let Some(d) = kind.dim() {
            if s.dim() != d {
                cx.fail(&space_path, format!("expected {d} coordinates for model kind {}, found {}", kind.name(), s.dim()));
            }
        }
    }
    if let ModelKind::Compartment { input, step } = &kind {
        if let Err(e) = compartment(input, *step) {
            cx.fail(&format!("{path}.input"), e.to_string());
        }
    }
    if let ModelKind::Transfer { noise, .. } = &kind {
        if !noise.is_stable() {
            cx.fail(&format!("{path}.noise.den"), "noise filter denominator is not stable");
        }
    }
    Some(ModelSpec { kind, theta, space })
}

fn model_kind(cx: &mut Checker, f: &mut Fields, kind: &str) -> Option<ModelKind> {
    match kind {
        "polynomial" => Some(ModelKind::Polynomial { degree: f.required(cx, "degree", count)? }),
        "linear" => Some(ModelKind::Linear { factors: f.required(cx, "factors", at_least_one)? }),
        "weighing" => Some(ModelKind::Weighing { factors: f.required(cx, "factors", at_least_one)? }),
        "exponential" => Some(ModelKind::Exponential),
        "compartment" => {
            let input = f.optional(cx, "input", Some(vec![[0.0, 1.0, 75.0], [1.0, 720.0, 1.45]]), infusion);
            let step = f.optional(cx, "step", Some(DEFAULT_STEP), positive);
            Some(ModelKind::Compartment { input: input?, step: step? })
        }
        "fir" => Some(ModelKind::Fir { taps: f.required(cx, "taps", at_least_one)? }),
        "transfer" => {
            let nb = f.required(cx, "nb", at_least_one);
            let na = f.optional(cx, "na", Some(0), count);
            let noise = f.optional(cx, "noise", Some(RationalTF::unit()), noise_filter);
            let sigma2 = f.optional(cx, "sigma2", Some(1.0), positive);
            Some(ModelKind::Transfer { nb: nb?, na: na?, noise: noise?, sigma2: sigma2? })
        }
        "kriging" => {
            let family = f.optional(cx, "family", Some(KernelFamily::SquaredExponential), kernel_family);
            let lengthscale = f.required(cx, "lengthscale", positive);
            let process_var = f.optional(cx, "process_var", Some(1.0), positive);
            let noise_var = f.optional(cx, "noise_var", Some(0.0), nonnegative);
            Some(ModelKind::Kriging {
                family: family?,
                lengthscale: lengthscale?,
                process_var: process_var?,
                noise_var: noise_var?,
            })
        }
        other => {
            cx.fail(&f.at("kind"), format!("unknown model kind \"{other}\" (expected one of {MODEL_KINDS})"));
            // Accept the remaining fields so only the kind is reported.
            f.known.extend(["degree", "factors", "input", "step", "taps", "nb", "na", "noise", "sigma2", "family", "lengthscale", "process_var", "noise_var"]);
            None
        }
    }
}

fn infusion(cx: &mut Checker, v: &Value, path: &str) -> Option<Vec<[f64; 3]>> {
    let rows = each(cx, v, path, numbers)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        match <[f64; 3]>::try_from(r.as_slice()) {
            Ok(t) => out.push(t),
            Err(_) => cx.fail(&format!("{path}[{i}]"), format!("expected [start, end, rate], found {} numbers", r.len())),
        }
    }
    (out.len() == rows.len()).then_some(out)
}

fn noise_filter(cx: &mut Checker, v: &Value, path: &str) -> Option<RationalTF> {
    let mut f = cx.object(v, path)?;
    let num = f.required(cx, "num", nonempty_numbers);
    let den = f.required(cx, "den", nonempty_numbers);
    let den_path = f.at("den");
    f.finish(cx);
    match RationalTF::new(num?, den?) {
        Ok(tf) => Some(tf),
        Err(e) => {
            cx.fail(&den_path, e.to_string());
            None
        }
    }
}

fn kernel_family(cx: &mut Checker, v: &Value, path: &str) -> Option<KernelFamily> {
    match string(cx, v, path)?.as_str() {
        "squared_exponential" => Some(KernelFamily::SquaredExponential),
        "exponential" => Some(KernelFamily::Exponential),
        other => {
            cx.fail(path, format!("unknown kernel family \"{other}\" (expected squared_exponential or exponential)"));
            None
        }
    }
}

fn space(cx: &mut Checker, v: &Value, path: &str) -> Option<Space> {
    let mut f = cx.object(v, path)?;
    if f.has("candidates") {
        let c = f.required(cx, "candidates", points);
        f.finish(cx);
        return Some(Space::Candidates { candidates: c? });
    }
    let lower = f.required(cx, "lower", nonempty_numbers);
    let upper = f.required(cx, "upper", nonempty_numbers);
    let upper_path = f.at("upper");
    f.finish(cx);
    let (lower, upper) = (lower?, upper?);
    if lower.len() != upper.len() {
        cx.fail(&upper_path, format!("expected {} bounds, found {}", lower.len(), upper.len()));
        return None;
    }
    if let Some(j) = lower.iter().zip(&upper).position(|(l, h)| l > h) {
        cx.fail(&format!("{upper_path}[{j}]"), "upper bound below lower bound");
        return None;
    }
    Some(Space::Box { lower, upper })
}

fn task(cx: &mut Checker, v: &Value, path: &str) -> Option<TaskSpec> {
    let mut f = cx.object(v, path)?;
    let kind = f.required(cx, "kind", string)?;
    let task = match kind.as_str() {
        "design" => {
            let method = f.optional(cx, "method", Some(Method::Fedorov), method);
            let n = f.maybe(cx, "n", at_least_one);
            let restarts = f.optional(cx, "restarts", Some(20), at_least_one);
            let robust = f.maybe(cx, "robust", robust);
            if method == Some(Method::Exchange) && n == Some(None) {
                cx.fail(&f.at("n"), "required for the exchange method");
            }
            if robust.as_ref().is_some_and(|r| r.is_some()) && matches!(method, Some(Method::Multiplicative | Method::Exchange)) {
                cx.fail(&f.at("robust"), "robust designs use the fedorov or wynn method");
            }
            (|| Some(TaskSpec::Design { method: method?, n: n?, restarts: restarts?, robust: robust? }))()
        }
        "certify" => f.required(cx, "measure", measure_source).map(|measure| TaskSpec::Certify { measure }),
        "round" => {
            let measure = f.required(cx, "measure", measure_source);
            let n = f.required(cx, "n", at_least_one);
            (|| Some(TaskSpec::Round { measure: measure?, n: n? }))()
        }
        "input-spectrum" => {
            f.optional(cx, "total_power", Some(1.0), positive).map(|total_power| TaskSpec::InputSpectrum { total_power })
        }
        "synthesize" => {
            let spectrum = f.required(cx, "spectrum", spectrum_source);
            let samples = f.required(cx, "samples", at_least_one);
            (|| Some(TaskSpec::Synthesize { spectrum: spectrum?, samples: samples? }))()
        }
        "krige" => {
            let data = f.required(cx, "data", data_source);
            let predict = f.maybe(cx, "predict", points);
            let lengthscales = f.optional(cx, "lengthscales", Some(Vec::new()), positives);
            (|| Some(TaskSpec::Krige { data: data?, predict: predict?, lengthscales: lengthscales? }))()
        }
        "spacefill" => {
            let n = f.required(cx, "n", at_least_one);
            let method = f.optional(cx, "method", Some(SpaceFillMethod::Maximin), fill_method);
            (|| Some(TaskSpec::Spacefill { n: n?, method: method? }))()
        }
        "ego" => {
            let objective = f.required(cx, "objective", objective);
            let budget = f.required(cx, "budget", at_least_one);
            let n_init = f.maybe(cx, "n_init", at_least_one);
            let ei_tol = f.optional(cx, "ei_tol", Some(1e-6), nonnegative);
            let lengthscales = f.optional(cx, "lengthscales", Some(Vec::new()), positives);
            (|| {
                Some(TaskSpec::Ego {
                    objective: objective?,
                    budget: budget?,
                    n_init: n_init?,
                    ei_tol: ei_tol?,
                    lengthscales: lengthscales?,
                })
            })()
        }
        "simulate" => {
            let theta_true = f.required(cx, "theta_true", nonempty_numbers);
            let n = f.required(cx, "n", at_least_one);
            let sigma = f.optional(cx, "sigma", Some(0.0), nonnegative);
            (|| Some(TaskSpec::Simulate { theta_true: theta_true?, n: n?, sigma: sigma? }))()
        }
        "discriminate" => {
            let rival = f.required(cx, "rival", model);
            let theta_true = f.required(cx, "theta_true", nonempty_numbers);
            let n = f.required(cx, "n", at_least_one);
            let sigma = f.optional(cx, "sigma", Some(0.0), nonnegative);
            (|| Some(TaskSpec::Discriminate { rival: rival?, theta_true: theta_true?, n: n?, sigma: sigma? }))()
        }
        other => {
            cx.fail(
                &f.at("kind"),
                format!(
                    "unknown task kind \"{other}\" (expected one of design, certify, round, input-spectrum, synthesize, krige, spacefill, ego, simulate, discriminate)"
                ),
            );
            return None;
        }
    };
    f.finish(cx);
    task
}

fn method(cx: &mut Checker, v: &Value, path: &str) -> Option<Method> {
    match string(cx, v, path)?.as_str() {
        "fedorov" => Some(Method::Fedorov),
        "wynn" => Some(Method::Wynn),
        "multiplicative" => Some(Method::Multiplicative),
        "exchange" => Some(Method::Exchange),
        other => {
            cx.fail(path, format!("unknown method \"{other}\" (expected fedorov, wynn, multiplicative or exchange)"));
            None
        }
    }
}

fn fill_method(cx: &mut Checker, v: &Value, path: &str) -> Option<SpaceFillMethod> {
    match string(cx, v, path)?.as_str() {
        "maximin" => Some(SpaceFillMethod::Maximin),
        "minimax" => Some(SpaceFillMethod::Minimax),
        "lhs" => Some(SpaceFillMethod::Lhs),
        other => {
            cx.fail(path, format!("unknown method \"{other}\" (expected maximin, minimax or lhs)"));
            None
        }
    }
}

fn robust(cx: &mut Checker, v: &Value, path: &str) -> Option<Robust> {
    let mut f = cx.object(v, path)?;
    let mode = f.optional(cx, "mode", Some("average".to_string()), string);
    let thetas = f.required(cx, "thetas", |cx, v, p| each(cx, v, p, nonempty_numbers));
    let weights = f.maybe(cx, "weights", numbers);
    let (mode_path, weights_path, thetas_path) = (f.at("mode"), f.at("weights"), f.at("thetas"));
    f.finish(cx);
    let (mode, thetas, weights) = (mode?, thetas?, weights?);
    if thetas.is_empty() {
        cx.fail(&thetas_path, "must not be empty");
        return None;
    }
    match mode.as_str() {
        "average" => {
            let m = thetas.len();
            let weights = weights.unwrap_or_else(|| vec![1.0 / m as f64; m]);
            if weights.len() != m {
                cx.fail(&weights_path, format!("expected {m} weights, found {}", weights.len()));
                return None;
            }
            if weights.iter().any(|w| *w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                cx.fail(&weights_path, "weights must be >= 0 and sum to 1");
                return None;
            }
            Some(Robust::Average { thetas, weights })
        }
        "minimax" => {
            if weights.is_some() {
                cx.fail(&weights_path, "minimax designs take no weights");
                return None;
            }
            Some(Robust::Minimax { thetas })
        }
        other => {
            cx.fail(&mode_path, format!("unknown mode \"{other}\" (expected average or minimax)"));
            None
        }
    }
}

fn objective(cx: &mut Checker, v: &Value, path: &str) -> Option<Objective> {
    let mut f = cx.object(v, path)?;
    let kind = f.required(cx, "kind", string)?;
    let out = match kind.as_str() {
        "sine" => {
            let frequency = f.optional(cx, "frequency", Some(10.0), number);
            let slope = f.optional(cx, "slope", Some(1.0), number);
            (|| Some(Objective::Sine { frequency: frequency?, slope: slope? }))()
        }
        "quadratic" => f.required(cx, "center", nonempty_numbers).map(|center| Objective::Quadratic { center }),
        other => {
            cx.fail(&f.at("kind"), format!("unknown objective \"{other}\" (expected sine or quadratic)"));
            return None;
        }
    };
    f.finish(cx);
    out
}

fn measure_source(cx: &mut Checker, v: &Value, path: &str) -> Option<Source<DesignMeasure>> {
    if let Some(s) = v.as_str() {
        return Some(Source::File(s.to_string()));
    }
    let mut f = cx.object(v, path)?;
    let support = f.required(cx, "support", points);
    let weights = f.required(cx, "weights", numbers);
    f.finish(cx);
    match DesignMeasure::new(support?, weights?) {
        Ok(m) => Some(Source::Inline(m)),
        Err(e) => {
            cx.fail(path, e.to_string());
            None
        }
    }
}

fn spectrum_source(cx: &mut Checker, v: &Value, path: &str) -> Option<Source<Spectrum>> {
    if let Some(s) = v.as_str() {
        return Some(Source::File(s.to_string()));
    }
    let mut f = cx.object(v, path)?;
    let omega = f.required(cx, "omega", numbers);
    let power = f.required(cx, "power", numbers);
    f.finish(cx);
    match Spectrum::new(omega?, power?) {
        Ok(s) => Some(Source::Inline(s)),
        Err(e) => {
            cx.fail(path, e.to_string());
            None
        }
    }
}

fn data_source(cx: &mut Checker, v: &Value, path: &str) -> Option<Source<KrigingData>> {
    if let Some(s) = v.as_str() {
        return Some(Source::File(s.to_string()));
    }
    let mut f = cx.object(v, path)?;
    let sites = f.required(cx, "sites", points);
    let y = f.required(cx, "y", numbers);
    f.finish(cx);
    match KrigingData::new(sites?, y?) {
        Ok(d) => Some(Source::Inline(d)),
        Err(e) => {
            cx.fail(path, e.to_string());
            None
        }
    }
}

/// Checks that span blocks: model/task compatibility and dimensions.
fn cross_check(cx: &mut Checker, model: Option<&ModelSpec>, task: &TaskSpec) {
    let name = task.name();
    let need = |cx: &mut Checker, ok: fn(&ModelKind) -> bool, what: &str| -> bool {
        match model {
            None => {
                cx.fail("$.model", format!("required for task {name}"));
                false
            }
            Some(m) if !ok(&m.kind) => {
                cx.fail("$.model.kind", format!("task {name} needs {what}, found {}", m.kind.name()));
                false
            }
            Some(_) => true,
        }
    };
    let need_space = |cx: &mut Checker| -> Option<usize> {
        match model.and_then(|m| m.space.as_ref()) {
            Some(s) => Some(s.dim()),
            None => {
                cx.fail("$.model.space", format!("required for task {name}"));
                None
            }
        }
    };
    match task {
        TaskSpec::Design { robust, .. } => {
            if need(cx, ModelKind::is_regression, "a regression model") {
                need_space(cx);
                let p = model.and_then(|m| m.kind.n_params()).unwrap_or(0);
                if let Some(r) = robust {
                    for (i, t) in r.thetas().iter().enumerate() {
                        if t.len() != p {
                            cx.fail(&format!("$.task.robust.thetas[{i}]"), format!("expected {p} parameters, found {}", t.len()));
                        }
                    }
                }
            }
        }
        TaskSpec::Certify { measure } | TaskSpec::Round { measure, .. } => {
            if need(cx, ModelKind::is_regression, "a regression model") {
                if let (Some(d), Source::Inline(m)) = (need_space(cx), measure) {
                    if m.dim() != d {
                        cx.fail("$.task.measure.support", format!("expected {d} coordinates, found {}", m.dim()));
                    }
                }
            }
        }
        TaskSpec::InputSpectrum { .. } => {
            need(cx, ModelKind::is_frequency, "a fir or transfer model");
        }
        TaskSpec::Synthesize { .. } => {}
        TaskSpec::Krige { data, predict, .. } => {
            if need(cx, |k| matches!(k, ModelKind::Kriging { .. }), "a kriging model") {
                let space_dim = model.and_then(|m| m.space.as_ref()).map(Space::dim);
                if predict.is_none() && space_dim.is_none() {
                    cx.fail("$.model.space", "required when task.predict is absent");
                }
                let data_dim = match data {
                    Source::Inline(d) => Some(d.sites[0].len()),
                    Source::File(_) => None,
                };
                let pred_dim = predict.as_ref().map(|p| p[0].len());
                if let (Some(a), Some(b)) = (data_dim.or(space_dim), pred_dim) {
                    if a != b {
                        cx.fail("$.task.predict", format!("expected {a} coordinates, found {b}"));
                    }
                }
                if let (Some(a), Some(b)) = (space_dim, data_dim) {
                    if a != b {
                        cx.fail("$.task.data.sites", format!("expected {a} coordinates, found {b}"));
                    }
                }
            }
        }
        TaskSpec::Spacefill { .. } => {
            if model.is_none() {
                cx.fail("$.model", format!("required for task {name}"));
            } else {
                need_space(cx);
            }
        }
        TaskSpec::Ego { objective, n_init, budget, .. } => {
            if need(cx, |k| matches!(k, ModelKind::Kriging { .. }), "a kriging model") {
                if let (Some(d), Objective::Quadratic { center }) = (need_space(cx), objective) {
                    if center.len() != d {
                        cx.fail("$.task.objective.center", format!("expected {d} coordinates, found {}", center.len()));
                    }
                }
            }
            if n_init.is_some_and(|n| n > *budget) {
                cx.fail("$.task.n_init", format!("exceeds the budget {budget}"));
            }
        }
        TaskSpec::Simulate { theta_true, .. } => {
            if need(cx, ModelKind::is_regression, "a regression model") {
                need_space(cx);
                check_len(cx, "$.task.theta_true", model, theta_true);
            }
        }
        TaskSpec::Discriminate { rival, theta_true, .. } => {
            if need(cx, ModelKind::is_regression, "a regression model") {
                need_space(cx);
                check_len(cx, "$.task.theta_true", model, theta_true);
                if !rival.kind.is_regression() {
                    cx.fail("$.task.rival.kind", format!("rival must be a regression model, found {}", rival.kind.name()));
                }
                if rival.space.is_some() {
                    cx.fail("$.task.rival.space", "the rival shares the model's space; remove it");
                }
                if let (Some(a), Some(b)) = (model.and_then(|m| m.kind.dim()), rival.kind.dim()) {
                    if a != b {
                        cx.fail("$.task.rival", format!("expected a {a}-dimensional model, found {b}"));
                    }
                }
            }
        }
    }
}

fn check_len(cx: &mut Checker, path: &str, model: Option<&ModelSpec>, theta: &[f64]) {
    if let Some(p) = model.and_then(|m| m.kind.n_params()) {
        if theta.len() != p {
            cx.fail(path, format!("expected {p} parameters, found {}", theta.len()));
        }
    }
}
