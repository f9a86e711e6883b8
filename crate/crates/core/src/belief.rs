//! Belief spaces and the cultural update/influence protocol.
//!
//! A belief system holds situational knowledge (the best exemplar its
//! followers have produced) and normative knowledge (a per-dimension interval
//! spanned by the current elite). Followers write to it through [`BeliefSystem::update`]
//! and are shaped by it through [`BeliefSystem::influence`].

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::problems::DynamicProblem;
use crate::rng::RandomStream;
use crate::types::{BeliefId, Bounds, Exemplar, Genome, Individual, Interval};

/// Fallback step scale, as a fraction of the bound width, for collapsed intervals.
pub const DEGENERATE_STEP_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSystem {
    id: BeliefId,
    situational: Option<Exemplar>,
    normative: Vec<Interval>,
    /// Best follower fitness per generation, newest last. Only the most recent
    /// `window + 1` entries are kept.
    history: VecDeque<f64>,
    history_capacity: usize,
    /// Total entries ever appended.
    recorded: u64,
    founded_at: u64,
}

/// Raised when [`BeliefSystem::update`] is called without followers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyFollowers(pub BeliefId);

impl BeliefSystem {
    /// A belief system with no knowledge yet: normative intervals span `bounds`.
    pub fn empty(id: BeliefId, bounds: &Bounds, window: usize, generation: u64) -> Self {
        Self {
            id,
            situational: None,
            normative: bounds.intervals().to_vec(),
            history: VecDeque::with_capacity(window + 1),
            history_capacity: window + 1,
            recorded: 0,
            founded_at: generation,
        }
    }

    /// Found a belief system around a single individual.
    ///
    /// The normative interval on each axis is centered on the founder's gene
    /// with half-width `widen * bound width`, clamped to the bounds.
    pub fn found(
        id: BeliefId,
        founder: &Individual,
        widen: f64,
        bounds: &Bounds,
        window: usize,
        generation: u64,
    ) -> Self {
        let normative = founder
            .genome
            .values()
            .iter()
            .zip(bounds.intervals())
            .map(|(&x, iv)| {
                let half = widen * iv.width();
                Interval::new(iv.clamp(x - half), iv.clamp(x + half))
            })
            .collect();
        let mut system = Self {
            id,
            situational: Some(founder.exemplar()),
            normative,
            history: VecDeque::with_capacity(window + 1),
            history_capacity: window + 1,
            recorded: 0,
            founded_at: generation,
        };
        system.push_history(founder.fitness);
        system
    }

    pub fn id(&self) -> BeliefId {
        self.id
    }

    pub fn situational(&self) -> Option<&Exemplar> {
        self.situational.as_ref()
    }

    /// Situational fitness, or +∞ before the first update.
    pub fn best_fitness(&self) -> f64 {
        self.situational.as_ref().map_or(f64::INFINITY, |e| e.fitness)
    }

    pub fn normative(&self) -> &[Interval] {
        &self.normative
    }

    pub fn founded_at(&self) -> u64 {
        self.founded_at
    }

    /// Number of generations recorded since founding.
    pub fn history_len(&self) -> u64 {
        self.recorded
    }

    /// Retained tail of the history, oldest first.
    pub fn recent_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    fn push_history(&mut self, value: f64) {
        if self.history.len() == self.history_capacity {
            self.history.pop_front();
        }
        self.history.push_back(value);
        self.recorded += 1;
    }

    /// Let the elite of `followers` write to the belief space.
    ///
    /// The elite is the best `ceil(elite_fraction * followers.len())`
    /// individuals. Their best replaces the situational exemplar when it is
    /// better, their coordinate-wise hull becomes the normative knowledge, and
    /// their best fitness is appended to the history.
    pub fn update(&mut self, followers: &[&Individual], elite_fraction: f64) -> Result<(), EmptyFollowers> {
        if followers.is_empty() {
            return Err(EmptyFollowers(self.id));
        }
        let elite_count = ((elite_fraction * followers.len() as f64).ceil() as usize).clamp(1, followers.len());
        let mut order: Vec<usize> = (0..followers.len()).collect();
        order.sort_by(|&a, &b| followers[a].fitness.total_cmp(&followers[b].fitness));
        let elite = &order[..elite_count];

        let best = followers[elite[0]];
        if best.fitness < self.best_fitness() {
            self.situational = Some(best.exemplar());
        }

        for (d, iv) in self.normative.iter_mut().enumerate() {
            let (lo, hi) = elite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
                let x = followers[k].genome.values()[d];
                (lo.min(x), hi.max(x))
            });
            *iv = Interval::new(lo, hi);
        }
        self.push_history(best.fitness);
        Ok(())
    }

    /// Re-evaluate the situational exemplar at time step `t` after a landscape change.
    pub fn reevaluate<P: DynamicProblem + ?Sized>(&mut self, problem: &P, t: u64) {
        if let Some(ex) = self.situational.as_mut() {
            ex.fitness = problem.evaluate(&ex.genome, t);
        }
    }

    /// Step scale used when perturbing a gene that already lies inside its interval.
    pub fn perturbation_scale(&self, d: usize, bounds: &Bounds, influence_scale: f64) -> f64 {
        let width = self.normative[d].width();
        if width > 0.0 {
            influence_scale * width
        } else {
            DEGENERATE_STEP_FRACTION * bounds.get(d).width()
        }
    }

    /// Apply the belief space to a parent genome.
    ///
    /// Each gene fires independently with probability `mutation_rate`. A gene
    /// outside its normative interval jumps to a uniform point inside it; a
    /// gene inside takes a zero-mean gaussian step of size
    /// [`perturbation_scale`](Self::perturbation_scale). The result is clamped
    /// to `bounds`.
    pub fn influence(
        &self,
        parent: &Genome,
        bounds: &Bounds,
        stream: &mut RandomStream,
        mutation_rate: f64,
        influence_scale: f64,
    ) -> Genome {
        let mut child = parent.clone();
        for (d, x) in child.values_mut().iter_mut().enumerate() {
            if !stream.chance(mutation_rate) {
                continue;
            }
            let iv = self.normative[d];
            if iv.contains(*x) {
                *x += self.perturbation_scale(d, bounds, influence_scale) * stream.normal();
            } else {
                *x = stream.uniform(iv.low, iv.high);
            }
        }
        bounds.clamp(&mut child);
        child
    }

    /// Windowed average improvement per generation, floored at `floor`.
    ///
    /// With `n = min(window, len - 1)` generations of history available, the
    /// rate is `(h[-1-n] - h[-1]) / n`. Positive values mean the best
    /// follower fitness decreased.
    pub fn rate_of_improvement(&self, window: usize, floor: f64) -> f64 {
        let len = self.history.len();
        if len == 0 {
            return floor;
        }
        let n = window.min(len - 1);
        if n == 0 {
            return floor;
        }
        let newest = self.history[len - 1];
        let oldest = self.history[len - 1 - n];
        let rate = (oldest - newest) / n as f64;
        if rate.is_nan() {
            floor
        } else {
            rate.max(floor)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn ind(values: Vec<f64>, fitness: f64) -> Individual {
        Individual {
            genome: Genome::new(values),
            fitness,
            allegiance: BeliefId(0),
            age: 0,
        }
    }

    fn with_history(values: &[f64], window: usize) -> BeliefSystem {
        let bounds = Bounds::uniform(1, 0.0, 1.0);
        let mut b = BeliefSystem::empty(BeliefId(0), &bounds, window, 0);
        for &v in values {
            b.push_history(v);
        }
        b
    }

    #[test]
    fn found_with_zero_widen_is_a_point() {
        let bounds = Bounds::uniform(2, 0.0, 1.0);
        let b = BeliefSystem::found(BeliefId(3), &ind(vec![0.2, 0.7], 1.5), 0.0, &bounds, 5, 4);
        assert_eq!(b.normative(), &[Interval::new(0.2, 0.2), Interval::new(0.7, 0.7)]);
        assert_eq!(b.situational().unwrap().fitness, 1.5);
        assert_eq!(b.history_len(), 1);
        assert_eq!(b.founded_at(), 4);
    }

    #[test]
    fn found_with_full_widen_covers_bounds() {
        let bounds = Bounds::uniform(2, -1.0, 3.0);
        let b = BeliefSystem::found(BeliefId(0), &ind(vec![0.0, 2.5], 0.0), 1.0, &bounds, 5, 0);
        assert_eq!(b.normative(), bounds.intervals());
    }

    #[test]
    fn found_clamps_to_bounds() {
        let bounds = Bounds::uniform(1, 0.0, 1.0);
        let b = BeliefSystem::found(BeliefId(0), &ind(vec![0.9], 0.0), 0.25, &bounds, 5, 0);
        let iv = b.normative()[0];
        assert!((iv.low - 0.65).abs() < 1e-15);
        assert_eq!(iv.high, 1.0);
    }

    #[test]
    fn singleton_update_collapses_normative() {
        let bounds = Bounds::uniform(2, -5.0, 5.0);
        let mut b = BeliefSystem::empty(BeliefId(0), &bounds, 5, 0);
        let f = ind(vec![1.0, -2.0], 3.0);
        b.update(&[&f], 1.0).unwrap();
        assert_eq!(b.normative(), &[Interval::new(1.0, 1.0), Interval::new(-2.0, -2.0)]);
        assert_eq!(b.situational().unwrap(), &f.exemplar());
    }

    #[test]
    fn elite_hull_is_coordinatewise() {
        let bounds = Bounds::uniform(2, -10.0, 10.0);
        let mut b = BeliefSystem::empty(BeliefId(0), &bounds, 5, 0);
        let a = ind(vec![0.0, 0.0], 1.0);
        let c = ind(vec![2.0, 4.0], 2.0);
        let worse = ind(vec![9.0, -9.0], 5.0);
        // elite = ceil(0.5 * 3) = 2 best
        b.update(&[&worse, &c, &a], 0.5).unwrap();
        assert_eq!(b.normative(), &[Interval::new(0.0, 2.0), Interval::new(0.0, 4.0)]);
    }

    #[test]
    fn worse_elite_keeps_situational() {
        let bounds = Bounds::uniform(1, 0.0, 1.0);
        let mut b = BeliefSystem::found(BeliefId(0), &ind(vec![0.5], 1.0), 0.1, &bounds, 5, 0);
        b.update(&[&ind(vec![0.1], 2.0)], 1.0).unwrap();
        assert_eq!(b.best_fitness(), 1.0);
        assert_eq!(b.situational().unwrap().genome.values(), &[0.5]);
        assert_eq!(b.history_len(), 2);
    }

    #[test]
    fn empty_update_is_a_contract_violation() {
        let bounds = Bounds::uniform(1, 0.0, 1.0);
        let mut b = BeliefSystem::empty(BeliefId(7), &bounds, 5, 0);
        assert_eq!(b.update(&[], 0.2), Err(EmptyFollowers(BeliefId(7))));
    }

    #[test]
    fn zero_mutation_rate_is_identity() {
        let bounds = Bounds::uniform(3, 0.0, 1.0);
        let b = BeliefSystem::found(BeliefId(0), &ind(vec![0.5; 3], 0.0), 0.1, &bounds, 5, 0);
        let parent = Genome::new(vec![0.01, 0.5, 0.99]);
        let mut s = derive_stream(1, "t");
        assert_eq!(b.influence(&parent, &bounds, &mut s, 0.0, 0.5), parent);
    }

    #[test]
    fn out_of_interval_gene_moves_inside() {
        let bounds = Bounds::uniform(1, 0.0, 1.0);
        let b = BeliefSystem::found(BeliefId(0), &ind(vec![0.5], 0.0), 0.1, &bounds, 5, 0);
        let mut s = derive_stream(2, "t");
        for _ in 0..200 {
            let child = b.influence(&Genome::new(vec![0.05]), &bounds, &mut s, 1.0, 0.5);
            assert!(b.normative()[0].contains(child.values()[0]));
        }
    }

    #[test]
    fn degenerate_interval_falls_back_to_bound_fraction() {
        let bounds = Bounds::uniform(1, 0.0, 1.0);
        let b = BeliefSystem::found(BeliefId(0), &ind(vec![0.5], 0.0), 0.0, &bounds, 5, 0);
        assert_eq!(b.normative()[0], Interval::new(0.5, 0.5));
        assert!((b.perturbation_scale(0, &bounds, 0.5) - 0.1).abs() < 1e-15);

        let wide = BeliefSystem::found(BeliefId(0), &ind(vec![0.5], 0.0), 0.25, &bounds, 5, 0);
        assert!((wide.perturbation_scale(0, &bounds, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rate_over_full_window() {
        assert_eq!(
            with_history(&[10.0, 8.0, 6.0, 4.0], 3).rate_of_improvement(3, 1e-12),
            2.0
        );
    }

    #[test]
    fn rate_uses_available_span_when_short() {
        // n = min(5, 2) = 2: (10 - 6) / 2
        assert_eq!(with_history(&[10.0, 8.0, 6.0], 5).rate_of_improvement(5, 1e-12), 2.0);
    }

    #[test]
    fn flat_or_fresh_history_hits_floor() {
        assert_eq!(with_history(&[5.0, 5.0, 5.0], 2).rate_of_improvement(2, 1e-12), 1e-12);
        assert_eq!(with_history(&[5.0], 4).rate_of_improvement(4, 1e-12), 1e-12);
        // worsening is floored too
        assert_eq!(with_history(&[1.0, 9.0], 4).rate_of_improvement(4, 1e-6), 1e-6);
    }

    #[test]
    fn ring_buffer_keeps_window_plus_one() {
        let b = with_history(&[100.0, 50.0, 10.0, 8.0, 6.0, 4.0], 3);
        assert_eq!(b.history_len(), 6);
        assert_eq!(b.recent_history().collect::<Vec<_>>(), vec![10.0, 8.0, 6.0, 4.0]);
        assert_eq!(b.rate_of_improvement(3, 1e-12), 2.0);
    }
}
