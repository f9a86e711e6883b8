//! Follower census, the allegiance function and hegemon selection.
//!
//! The affinity of an individual `j` for belief system `i` is
//!
//! ```text
//! score(i, j) = n_i * r_i / (N * r_j)
//! ```
//!
//! where `n_i` is the share of the population following `i`, `r_i` its rate
//! of improvement, `N` the number of live systems and `r_j` the rate of the
//! system `j` currently follows. Scores are not probabilities on their own;
//! they are used as weights and normalized together with the weight of the
//! "found a new system" option.

use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;
use crate::types::BeliefId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub id: BeliefId,
    pub followers: usize,
    /// Rate of improvement, already floored.
    pub rate: f64,
    /// Situational fitness, used to break ties between equally large systems.
    pub best_fitness: f64,
}

/// Snapshot of every live belief system and its following.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    entries: Vec<CensusEntry>,
    population_size: usize,
    hegemon: BeliefId,
}

impl Census {
    /// Build a census. `entries` must be non-empty and follower counts must
    /// sum to the population size; entries are kept in id order.
    pub fn new(mut entries: Vec<CensusEntry>) -> Self {
        assert!(!entries.is_empty(), "a census needs at least one belief system");
        entries.sort_by_key(|e| e.id);
        let population_size = entries.iter().map(|e| e.followers).sum();
        let hegemon = select_hegemon(&entries);
        Self {
            entries,
            population_size,
            hegemon,
        }
    }

    pub fn entries(&self) -> &[CensusEntry] {
        &self.entries
    }

    pub fn get(&self, id: BeliefId) -> Option<&CensusEntry> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|k| &self.entries[k])
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    /// Number of live belief systems, `N`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hegemon(&self) -> BeliefId {
        self.hegemon
    }

    /// Follower share `n_i`.
    pub fn share(&self, id: BeliefId) -> f64 {
        match (self.get(id), self.population_size) {
            (Some(e), p) if p > 0 => e.followers as f64 / p as f64,
            _ => 0.0,
        }
    }

    pub fn hegemon_share(&self) -> f64 {
        self.share(self.hegemon)
    }
}

fn select_hegemon(entries: &[CensusEntry]) -> BeliefId {
    // entries are in id order, so keeping the first of equals prefers the lower id
    let mut best = &entries[0];
    for e in &entries[1..] {
        let larger = e.followers > best.followers;
        let tie_better = e.followers == best.followers && e.best_fitness < best.best_fitness;
        if larger || tie_better {
            best = e;
        }
    }
    best.id
}

/// The system with the most followers; ties go to the better situational
/// fitness, then to the lower id.
pub fn determine_hegemon(census: &Census) -> BeliefId {
    select_hegemon(&census.entries)
}

/// Unnormalized allegiance weight of individual `j` (following `follows`) for system `target`.
pub fn raw_score(census: &Census, target: BeliefId, follows: BeliefId) -> f64 {
    let r_i = census.get(target).map_or(0.0, |e| e.rate);
    let r_j = census.get(follows).map_or(f64::NAN, |e| e.rate);
    census.share(target) * r_i / (census.len() as f64 * r_j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Join(BeliefId),
    FoundNew,
}

/// A categorical distribution over live systems plus the founding option.
#[derive(Debug, Clone, PartialEq)]
pub struct AllegianceDistribution {
    choices: Vec<Choice>,
    probabilities: Vec<f64>,
}

impl AllegianceDistribution {
    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, choice: Choice) -> f64 {
        self.choices
            .iter()
            .position(|c| *c == choice)
            .map_or(0.0, |k| self.probabilities[k])
    }

    /// Weights normalized to sum to one; all-zero weights put everything on `fallback`.
    pub fn from_weights(choices: Vec<Choice>, weights: Vec<f64>, fallback: Choice) -> Self {
        debug_assert_eq!(choices.len(), weights.len());
        let total: f64 = weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            let probabilities = weights.iter().map(|w| w / total).collect();
            Self { choices, probabilities }
        } else {
            let probabilities = choices.iter().map(|c| if *c == fallback { 1.0 } else { 0.0 }).collect();
            Self { choices, probabilities }
        }
    }

    /// The same distribution with the founding option removed and the rest renormalized.
    pub fn without_founding(&self, fallback: Choice) -> Self {
        let (choices, weights): (Vec<_>, Vec<_>) = self
            .choices
            .iter()
            .zip(&self.probabilities)
            .filter(|(c, _)| **c != Choice::FoundNew)
            .map(|(c, p)| (*c, *p))
            .unzip();
        Self::from_weights(choices, weights, fallback)
    }
}

/// Allegiance distribution for an individual following `follows`.
///
/// Weights are the raw scores of every live system plus `spawn_weight` for
/// founding a new one. If every weight is zero the individual stays put.
pub fn allegiance_distribution(census: &Census, follows: BeliefId, spawn_weight: f64) -> AllegianceDistribution {
    let mut choices = Vec::with_capacity(census.len() + 1);
    let mut weights = Vec::with_capacity(census.len() + 1);
    for e in census.entries() {
        choices.push(Choice::Join(e.id));
        weights.push(raw_score(census, e.id, follows));
    }
    choices.push(Choice::FoundNew);
    weights.push(spawn_weight.max(0.0));
    AllegianceDistribution::from_weights(choices, weights, Choice::Join(follows))
}

/// Categorical draw from `dist`.
pub fn sample_allegiance(dist: &AllegianceDistribution, stream: &mut RandomStream) -> Choice {
    let u = stream.unit();
    let mut acc = 0.0;
    let mut last_positive = None;
    for (c, &p) in dist.choices.iter().zip(&dist.probabilities) {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last_positive = Some(*c);
        if u < acc {
            return *c;
        }
    }
    // rounding left the cumulative sum just short of one
    last_positive.expect("allegiance distribution has no mass")
}
