//! Command-line frontend for oedkit: problem-file parsing, command dispatch and
//! artifact output. Exit codes: 0 success, 2 completed but uncertified (or a
//! built-in simulation check failed), 1 error.

pub mod args;
mod commands;
pub mod error;
mod output;
pub mod problem;
mod sims;

use std::path::Path;

use log::debug;

use crate::args::{Cli, Command, Global, Simulation};
use crate::error::{CliError, Result};
use crate::output::{read_text, OutDir};
use crate::problem::{parse_problem, Grid, ProblemSpec, DEFAULT_OUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Uncertified,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::Uncertified => 2,
        }
    }
}

/// Read and validate a problem file, then apply command-line overrides.
pub fn load_problem(path: &Path, global: &Global) -> Result<ProblemSpec> {
    let text = read_text(path)?;
    let mut spec = parse_problem(&text).map_err(CliError::Parse)?;
    let o = &mut spec.options;
    if let Some(s) = global.seed {
        o.seed = s;
    }
    if let Some(e) = global.epsilon {
        if e.is_nan() || e <= 0.0 {
            return Err(CliError::Usage(format!("--epsilon {e} must be positive")));
        }
        o.epsilon = e;
    }
    if let Some(m) = global.max_iter {
        o.max_iter = m;
    }
    if let Some(g) = global.grid {
        if g < 2 {
            return Err(CliError::Usage("--grid needs at least 2 levels".into()));
        }
        o.grid = Grid::Levels(g);
    }
    if let Some(out) = &global.out {
        o.out = out.to_string_lossy().into_owned();
    }
    debug!("problem: {}", spec.to_json());
    Ok(spec)
}

fn expect_task(spec: &ProblemSpec, name: &str) -> Result<()> {
    if spec.task.name() == name {
        Ok(())
    } else {
        Err(CliError::Usage(format!("problem task is \"{}\", but the command is {name}", spec.task.name())))
    }
}

fn out_dir(global: &Global) -> Result<OutDir> {
    OutDir::create(global.out.clone().unwrap_or_else(|| DEFAULT_OUT.into()))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    type Handler = fn(&ProblemSpec, &OutDir) -> Result<Outcome>;
    let (path, name, handler): (&Path, &str, Handler) = match &cli.command {
        Command::Design(p) => (&p.problem, "design", commands::design),
        Command::Certify(p) => (&p.problem, "certify", commands::certify),
        Command::Round(p) => (&p.problem, "round", commands::round),
        Command::InputSpectrum(p) => (&p.problem, "input-spectrum", commands::input_spectrum),
        Command::Synthesize(p) => (&p.problem, "synthesize", commands::synthesize),
        Command::Krige(p) => (&p.problem, "krige", commands::krige),
        Command::Spacefill(p) => (&p.problem, "spacefill", commands::spacefill),
        Command::Ego(p) => (&p.problem, "ego", commands::ego),
        Command::Discriminate(p) => {
            let spec = load_problem(&p.problem, g)?;
            expect_task(&spec, "discriminate")?;
            return sims::discriminate(&spec, p.seeds, &OutDir::create(&spec.options.out)?);
        }
        Command::Simulate(sim) => {
            let seed = g.seed.unwrap_or(0);
            return match sim {
                Simulation::LaiWei(a) => sims::lai_wei(a, seed, &out_dir(g)?),
                Simulation::Sto(a) => sims::sto(a, seed, g.grid, &out_dir(g)?),
                Simulation::Nfc(a) => sims::nfc(a, seed, &out_dir(g)?),
                Simulation::Sequential(p) => {
                    let spec = load_problem(&p.problem, g)?;
                    expect_task(&spec, "simulate")?;
                    sims::sequential(&spec, p.seeds, &OutDir::create(&spec.options.out)?)
                }
            };
        }
    };
    let spec = load_problem(path, g)?;
    expect_task(&spec, name)?;
    handler(&spec, &OutDir::create(&spec.options.out)?)
}
