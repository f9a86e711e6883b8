use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use revolutionary::config::load_toml;
use revolutionary::{Algorithm, ProblemConfig, ProblemKind, RunConfig, HEGEMON_THRESHOLD};

#[derive(Debug, Parser)]
#[command(
    name = "revolutionary",
    version,
    about = "Competing belief systems for dynamic optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm on one seed and write its JSON and CSV records.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several algorithms over several seeds and summarize offline error.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "ra,ca,restart,island")]
        algo: Vec<Algorithm>,
        /// Seeds as `a..b` (inclusive) or a comma list.
        #[arg(long, value_parser = parse_seeds, default_value = "1..20")]
        seeds: Seeds,
    },
    /// Report lifecycle stages found in saved JSON records.
    Stages {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Follower share at which a hegemon counts as formed.
        #[arg(long, default_value_t = HEGEMON_THRESHOLD)]
        threshold: f64,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with an optional `algo` key and `[run]` and `[problem]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub severity: Option<f64>,
    #[arg(long)]
    pub period: Option<u64>,
    #[arg(long)]
    pub peaks: Option<usize>,
    #[arg(long)]
    pub generations: Option<u64>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub beliefs: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub elite: Option<f64>,
    #[arg(long)]
    pub stagnation_boost: Option<f64>,
    /// Generations between island migrations.
    #[arg(long)]
    pub migration_interval: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("invalid seed list `{s}` (expected a..b or a,b,c)");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok(Seeds((a..=b).collect()));
    }
    let seeds = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Seeds(seeds))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    algo: Option<String>,
    migration_interval: Option<u64>,
    run: RunConfig,
    problem: ProblemConfig,
}

/// Fully resolved settings: defaults, then the config file, then flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub algo: Option<Algorithm>,
    pub migration_interval: Option<u64>,
    pub run: RunConfig,
    pub problem: ProblemConfig,
}

impl Settings {
    /// `algo` with the configured island migration interval applied.
    pub fn algorithm(&self, algo: Algorithm) -> Algorithm {
        match (algo, self.migration_interval) {
            (Algorithm::IslandGa { .. }, Some(m)) => Algorithm::IslandGa { migration_interval: m },
            (a, _) => a,
        }
    }
}

impl Common {
    pub fn resolve(&self) -> Result<Settings> {
        let file: FileConfig = match &self.config {
            Some(path) => load_toml(path).with_context(|| "--config")?,
            None => FileConfig::default(),
        };
        let algo = file
            .algo
            .map(|a| a.parse::<Algorithm>())
            .transpose()
            .map_err(anyhow::Error::msg)
            .context("--config: algo")?;
        let mut run = file.run;
        let mut problem = file.problem;

        set(&mut problem.kind, self.problem);
        set(&mut run.dimension, self.dim);
        set(&mut problem.severity, self.severity);
        set(&mut problem.period, self.period);
        set(&mut problem.peaks, self.peaks);
        set(&mut run.generations, self.generations);
        set(&mut run.population_size, self.pop);
        set(&mut run.initial_belief_count, self.beliefs);
        set(&mut run.improvement_window, self.window);
        set(&mut run.elite_fraction, self.elite);
        set(&mut run.stagnation_boost, self.stagnation_boost);

        if self.workers == 0 {
            bail!("--workers must be ≥ 1");
        }
        let migration_interval = self.migration_interval.or(file.migration_interval);
        if migration_interval == Some(0) {
            bail!("--migration-interval must be ≥ 1");
        }
        Ok(Settings {
            algo,
            migration_interval,
            run,
            problem,
        })
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Flag that sets a `RunConfig` field, for error messages.
pub fn flag_for(field: &str) -> Option<&'static str> {
    Some(match field {
        "population_size" => "--pop",
        "initial_belief_count" => "--beliefs",
        "dimension" => "--dim",
        "generations" => "--generations",
        "improvement_window" => "--window",
        "elite_fraction" => "--elite",
        "stagnation_boost" => "--stagnation-boost",
        _ => return None,
    })
}
