//! Value types shared by every module: genomes, search bounds, individuals.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a belief system. Issued monotonically and never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefId(pub u64);

impl fmt::Display for BeliefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Closed interval `[low, high]` along one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Self {
        debug_assert!(low <= high, "interval [{low}, {high}] is inverted");
        Self { low, high }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.low, self.high)
    }
}

/// Per-dimension search box of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    intervals: Vec<Interval>,
}

impl Bounds {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self { intervals }
    }

    /// The same `[low, high]` on each of `dimension` axes.
    pub fn uniform(dimension: usize, low: f64, high: f64) -> Self {
        Self::new(vec![Interval::new(low, high); dimension])
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn get(&self, d: usize) -> Interval {
        self.intervals[d]
    }

    pub fn contains(&self, genome: &Genome) -> bool {
        genome.dimension() == self.dimension()
            && genome
                .values()
                .iter()
                .zip(&self.intervals)
                .all(|(x, iv)| iv.contains(*x))
    }

    pub fn clamp(&self, genome: &mut Genome) {
        for (x, iv) in genome.values.iter_mut().zip(&self.intervals) {
            *x = iv.clamp(*x);
        }
    }
}

/// Real-valued solution vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome {
    values: Vec<f64>,
}

impl Genome {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn distance(&self, other: &Genome) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for Genome {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// A genome paired with its fitness (minimization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub genome: Genome,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    /// Objective value at the current time step; lower is better.
    pub fitness: f64,
    pub allegiance: BeliefId,
    /// Generations since this genome was produced.
    pub age: u64,
}

impl Individual {
    pub fn exemplar(&self) -> Exemplar {
        Exemplar {
            genome: self.genome.clone(),
            fitness: self.fitness,
        }
    }
}

/// Index of the individual with the lowest fitness. Ties go to the lower index.
pub(crate) fn best_index<'a, I>(fitnesses: I) -> Option<usize>
where
    I: IntoIterator<Item = &'a f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, &f) in fitnesses.into_iter().enumerate() {
        match best {
            Some((_, b)) if f >= b => {}
            _ => best = Some((i, f)),
        }
    }
    best.map(|(i, _)| i)
}
