//! Dissident spawning, subculture diversity and deletion of abandoned belief systems.

use serde::{Deserialize, Serialize};

use crate::belief::BeliefSystem;
use crate::types::{BeliefId, Bounds, Genome, Individual};

/// Data-driven spawn signal of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnSignal {
    /// Share of sentinels that changed.
    pub dp: f64,
    /// Diversity factor of the subculture representatives.
    pub div: f64,
    pub p_spawn: f64,
}

impl SpawnSignal {
    pub fn new(dp: f64, div: f64) -> Self {
        Self {
            dp,
            div,
            p_spawn: spawn_probability(dp, div),
        }
    }
}

/// Symmetric euclidean distance matrix with a zero diagonal.
pub fn distance_matrix(reps: &[Genome]) -> Vec<Vec<f64>> {
    let n = reps.len();
    let mut d = vec![vec![0.0; n]; n];
    for m in 0..n {
        for k in m + 1..n {
            let v = reps[m].distance(&reps[k]);
            d[m][k] = v;
            d[k][m] = v;
        }
    }
    d
}

/// `max(d_mn) / (0.5 * sum_{m != n} d_mn)` over the representatives.
///
/// The sum runs over ordered pairs, so the half counts every unordered pair
/// once. Fewer than two representatives, or all of them coinciding, gives 1.
pub fn diversity(reps: &[Genome]) -> f64 {
    if reps.len() < 2 {
        return 1.0;
    }
    let d = distance_matrix(reps);
    let mut max = 0.0f64;
    let mut ordered_sum = 0.0;
    for (m, row) in d.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if m != k {
                max = max.max(v);
                ordered_sum += v;
            }
        }
    }
    if max == 0.0 {
        return 1.0;
    }
    max / (0.5 * ordered_sum)
}

/// `dp * div`, clamped to `[0, 1]`.
pub fn spawn_probability(dp: f64, div: f64) -> f64 {
    (dp * div).clamp(0.0, 1.0)
}

/// Weight of the founding option for one individual.
///
/// Everyone receives `p_spawn`. Followers of the hegemon additionally receive
/// `stagnation_boost * min(1, rate_floor / hegemon_rate)`, which approaches
/// the full boost as the hegemon's improvement rate decays to the floor.
pub fn spawn_weight_for(
    follows_hegemon: bool,
    p_spawn: f64,
    hegemon_rate: f64,
    rate_floor: f64,
    stagnation_boost: f64,
) -> f64 {
    let stagnation = if follows_hegemon {
        stagnation_boost * (rate_floor / hegemon_rate).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p_spawn + stagnation
}

/// Result of removing abandoned belief systems.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CullOutcome {
    pub survivors: Vec<BeliefId>,
    pub deleted: Vec<BeliefId>,
    /// Set when every system was empty and `fallback` was kept anyway.
    pub guard_retained: Option<BeliefId>,
}

/// Drop every system without followers, keeping at least one.
///
/// `counts` lists each live system and its follower count. When all counts
/// are zero the system `fallback` (the largest before re-sampling) survives.
pub fn cull(counts: &[(BeliefId, usize)], fallback: BeliefId) -> CullOutcome {
    let mut out = CullOutcome::default();
    for &(id, n) in counts {
        if n > 0 {
            out.survivors.push(id);
        } else {
            out.deleted.push(id);
        }
    }
    if out.survivors.is_empty() {
        let keep = counts
            .iter()
            .map(|&(id, _)| id)
            .find(|&id| id == fallback)
            .or_else(|| counts.first().map(|&(id, _)| id));
        if let Some(id) = keep {
            out.deleted.retain(|&d| d != id);
            out.survivors.push(id);
            out.guard_retained = Some(id);
        }
    }
    out
}

/// Issues belief ids; never hands out the same id twice.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefIds {
    next: u64,
}

impl BeliefIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn issue(&mut self) -> BeliefId {
        let id = BeliefId(self.next);
        self.next += 1;
        id
    }

    pub fn issued(&self) -> u64 {
        self.next
    }
}

/// Found a belief system around `founder` and move the founder into it.
pub fn found_dissident(
    ids: &mut BeliefIds,
    founder: &mut Individual,
    widen: f64,
    bounds: &Bounds,
    window: usize,
    generation: u64,
) -> BeliefSystem {
    let id = ids.issue();
    let system = BeliefSystem::found(id, founder, widen, bounds, window, generation);
    founder.allegiance = id;
    system
}
