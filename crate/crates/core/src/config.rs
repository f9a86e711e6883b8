//! Run configuration and its validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tunables of a single run. Every field has a default so a config file only
/// needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Total individuals across all subcultures.
    pub population_size: usize,
    /// Number of belief systems at start.
    pub initial_belief_count: usize,
    pub dimension: usize,
    pub generations: u64,
    /// Window (generations) over which a belief system's improvement rate is averaged.
    pub improvement_window: usize,
    /// Lower floor on any improvement rate.
    pub rate_floor: f64,
    /// Fraction of a subculture allowed to update its belief system.
    pub elite_fraction: f64,
    pub sentinel_count: usize,
    /// Absolute difference above which a sentinel counts as changed.
    pub change_tolerance: f64,
    pub seed: u64,
    pub crossover_rate: f64,
    /// Per-gene probability that the influence operator fires.
    pub mutation_rate: f64,
    /// Half-width of a freshly founded normative interval, as a fraction of the bound width.
    pub widen: f64,
    /// Influence step scale, as a fraction of the normative interval width.
    pub influence_scale: f64,
    /// Extra defection weight for followers of a stagnant hegemon.
    pub stagnation_boost: f64,
    /// Cap on foundings per generation, as a fraction of the population.
    pub max_foundings_fraction: f64,
    /// When false no dissident is ever founded.
    pub spawning: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            initial_belief_count: 4,
            dimension: 5,
            generations: 500,
            improvement_window: 10,
            rate_floor: 1e-12,
            elite_fraction: 0.2,
            sentinel_count: 10,
            change_tolerance: 1e-9,
            seed: 1,
            crossover_rate: 0.9,
            mutation_rate: 0.3,
            widen: 0.1,
            influence_scale: 0.5,
            stagnation_boost: 0.05,
            max_foundings_fraction: 0.1,
            spawning: true,
        }
    }
}

/// A single failed invariant of [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub requirement: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} must be {}", self.field, self.requirement)
    }
}

/// A config whose invariants have been checked, plus derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    config: RunConfig,
    subculture_sizes: Vec<usize>,
}

impl ValidatedConfig {
    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Initial follower count of each belief system, remainder to the lowest indices.
    pub fn subculture_sizes(&self) -> &[usize] {
        &self.subculture_sizes
    }

    /// Most dissidents that may be founded in one generation.
    pub fn max_foundings(&self) -> usize {
        (self.config.max_foundings_fraction * self.config.population_size as f64).ceil() as usize
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = RunConfig;

    fn deref(&self) -> &RunConfig {
        &self.config
    }
}

fn unit_closed(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

pub fn validate_config(cfg: RunConfig) -> Result<ValidatedConfig> {
    let mut violations = Vec::new();
    let mut check = |ok: bool, field: &'static str, requirement: &'static str| {
        if !ok {
            violations.push(Violation { field, requirement });
        }
    };

    check(cfg.population_size >= 1, "population_size", "≥ 1");
    check(cfg.initial_belief_count >= 1, "initial_belief_count", "≥ 1");
    check(
        cfg.initial_belief_count <= cfg.population_size,
        "initial_belief_count",
        "≤ population_size",
    );
    check(cfg.dimension >= 1, "dimension", "≥ 1");
    check(cfg.improvement_window >= 1, "improvement_window", "≥ 1");
    check(cfg.rate_floor > 0.0 && cfg.rate_floor.is_finite(), "rate_floor", "> 0");
    check(
        cfg.elite_fraction > 0.0 && cfg.elite_fraction <= 1.0,
        "elite_fraction",
        "in (0, 1]",
    );
    check(cfg.sentinel_count >= 1, "sentinel_count", "≥ 1");
    check(cfg.change_tolerance >= 0.0, "change_tolerance", "≥ 0");
    check(unit_closed(cfg.crossover_rate), "crossover_rate", "in [0, 1]");
    check(unit_closed(cfg.mutation_rate), "mutation_rate", "in [0, 1]");
    check(unit_closed(cfg.widen), "widen", "in [0, 1]");
    check(
        cfg.influence_scale > 0.0 && cfg.influence_scale.is_finite(),
        "influence_scale",
        "> 0",
    );
    check(
        cfg.stagnation_boost >= 0.0 && cfg.stagnation_boost.is_finite(),
        "stagnation_boost",
        "≥ 0",
    );
    check(
        unit_closed(cfg.max_foundings_fraction),
        "max_foundings_fraction",
        "in [0, 1]",
    );

    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }

    let base = cfg.population_size / cfg.initial_belief_count;
    let remainder = cfg.population_size % cfg.initial_belief_count;
    let subculture_sizes = (0..cfg.initial_belief_count)
        .map(|i| base + usize::from(i < remainder))
        .collect();
    Ok(ValidatedConfig {
        config: cfg,
        subculture_sizes,
    })
}

/// Read a TOML document into `T`, rejecting unknown keys.
pub fn load_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
