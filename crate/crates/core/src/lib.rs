//! Revolutionary algorithms for dynamic optimization.
//!
//! A population is partitioned among competing belief systems. Each belief
//! system steers the offspring of its followers (a cultural algorithm), while
//! followers re-choose their allegiance every generation in proportion to each
//! system's share and rate of improvement. When the dominant system (the
//! hegemon) stagnates, or the landscape moves, individuals defect and found
//! dissident systems, one of which may eventually become the new hegemon.
//!
//! ```
//! use revolutionary::{execute, Algorithm, Engine, ProblemConfig, ProblemKind, RunConfig};
//!
//! let cfg = RunConfig { generations: 20, ..RunConfig::default() };
//! let problem = ProblemConfig { kind: ProblemKind::Sphere, ..ProblemConfig::default() };
//! let record = execute(Algorithm::Revolutionary, &cfg, &problem, &Engine::default()).unwrap();
//! assert_eq!(record.rows.len(), 21);
//! ```

pub mod allegiance;
pub mod baselines;
pub mod belief;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod problems;
pub mod revolution;
pub mod rng;
pub mod types;

pub use allegiance::{
    allegiance_distribution, determine_hegemon, raw_score, sample_allegiance, AllegianceDistribution, Census,
    CensusEntry, Choice,
};
pub use baselines::{execute, run_baseline, run_on, Algorithm};
pub use belief::BeliefSystem;
pub use config::{validate_config, RunConfig, ValidatedConfig};
pub use engine::{Dynamics, Engine, GenerationEvents, Phase, World};
pub use error::{Error, Result};
pub use metrics::{detect_stages, offline_error, GenerationRow, RunEvent, RunRecord, StageReport, HEGEMON_THRESHOLD};
pub use problems::{detect_change, Benchmark, DynamicProblem, ProblemConfig, ProblemKind, SentinelSet};
pub use revolution::{diversity, spawn_probability, spawn_weight_for, SpawnSignal};
pub use rng::{derive_stream, RandomStream};
pub use types::{BeliefId, Bounds, Exemplar, Genome, Individual, Interval};
