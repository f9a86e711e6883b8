//! Comparison algorithms sharing the engine's operators, budget and record schema.
//!
//! - `restart`: a single cultural population that starts over whenever a change is detected.
//! - `ca`: a single static belief system, never spawning dissidents.
//! - `island`: fixed subpopulations with ring migration of each island's best.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{validate_config, RunConfig, ValidatedConfig};
use crate::engine::{Dynamics, Engine};
use crate::error::Result;
use crate::metrics::RunRecord;
use crate::problems::{Benchmark, DynamicProblem, ProblemConfig};

pub const DEFAULT_MIGRATION_INTERVAL: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    /// Competing belief systems with revolution.
    Revolutionary,
    /// Single belief system, no spawning.
    StaticCa,
    /// Full re-initialization on every detected change.
    RestartGa,
    IslandGa {
        migration_interval: u64,
    },
}

impl Algorithm {
    /// Short name used on the command line and in file names.
    pub fn short_name(&self) -> &'static str {
        match self {
            Algorithm::Revolutionary => "ra",
            Algorithm::StaticCa => "ca",
            Algorithm::RestartGa => "restart",
            Algorithm::IslandGa { .. } => "island",
        }
    }

    /// Config actually used by this algorithm when asked to run `cfg`.
    pub fn effective_config(&self, cfg: &RunConfig) -> RunConfig {
        match self {
            Algorithm::StaticCa | Algorithm::RestartGa => RunConfig {
                initial_belief_count: 1,
                spawning: false,
                ..cfg.clone()
            },
            Algorithm::IslandGa { .. } => RunConfig {
                spawning: false,
                ..cfg.clone()
            },
            Algorithm::Revolutionary => cfg.clone(),
        }
    }

    fn dynamics(&self) -> Dynamics {
        match *self {
            Algorithm::Revolutionary | Algorithm::StaticCa => Dynamics::Revolutionary,
            Algorithm::RestartGa => Dynamics::Restart,
            Algorithm::IslandGa { migration_interval } => Dynamics::Islands { migration_interval },
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ra" => Ok(Algorithm::Revolutionary),
            "ca" => Ok(Algorithm::StaticCa),
            "restart" => Ok(Algorithm::RestartGa),
            "island" => Ok(Algorithm::IslandGa {
                migration_interval: DEFAULT_MIGRATION_INTERVAL,
            }),
            other => Err(format!(
                "unknown algorithm `{other}` (expected ra, ca, restart or island)"
            )),
        }
    }
}

/// Run `algorithm` on any problem. The record carries no problem echo.
pub fn run_on<P: DynamicProblem + ?Sized>(
    algorithm: Algorithm,
    cfg: &RunConfig,
    problem: &P,
    engine: &Engine,
) -> Result<RunRecord> {
    let validated: ValidatedConfig = validate_config(algorithm.effective_config(cfg))?;
    let parts = engine.run(&validated, problem, algorithm.dynamics())?;
    Ok(parts.into_record(algorithm, &validated, None))
}

/// Run one of the comparison algorithms.
pub fn run_baseline<P: DynamicProblem + ?Sized>(
    kind: Algorithm,
    cfg: &RunConfig,
    problem: &P,
    engine: &Engine,
) -> Result<RunRecord> {
    run_on(kind, cfg, problem, engine)
}

/// Build the benchmark described by `problem` (landscape drawn from the run
/// seed) and run `algorithm` on it.
pub fn execute(algorithm: Algorithm, cfg: &RunConfig, problem: &ProblemConfig, engine: &Engine) -> Result<RunRecord> {
    let bench = Benchmark::for_run(problem.clone(), cfg.dimension, cfg.seed, cfg.generations)?;
    let mut record = run_on(algorithm, cfg, &bench, engine)?;
    record.problem = Some(problem.clone());
    Ok(record)
}
