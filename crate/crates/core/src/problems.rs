//! Time-indexed benchmark landscapes and sentinel-based change detection.
//!
//! Landscapes change synchronously at generation boundaries: generation `g`
//! sees time step `g / period`. The full schedule is drawn up front from the
//! run seed, so [`DynamicProblem::evaluate`] is a pure function of
//! `(genome, time step)`. Time steps past the end of the schedule reuse the
//! final landscape.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_stream, RandomStream};
use crate::types::{Bounds, Genome, Interval};

/// An objective (minimized) that may move over time.
pub trait DynamicProblem: Sync {
    fn bounds(&self) -> &Bounds;

    fn dimension(&self) -> usize {
        self.bounds().dimension()
    }

    fn evaluate(&self, genome: &Genome, t: u64) -> f64;

    /// Global minimum at time `t`, when known.
    fn known_optimum(&self, t: u64) -> Option<f64>;

    /// Time step in effect during `generation`.
    fn time_step(&self, generation: u64) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Sphere,
    Peaks,
    Rastrigin,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Sphere => "sphere",
            ProblemKind::Peaks => "peaks",
            ProblemKind::Rastrigin => "rastrigin",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sphere" => Ok(ProblemKind::Sphere),
            "peaks" => Ok(ProblemKind::Peaks),
            "rastrigin" => Ok(ProblemKind::Rastrigin),
            other => Err(format!(
                "unknown problem `{other}` (expected sphere, peaks or rastrigin)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Euclidean length of each scheduled move.
    pub severity: f64,
    /// Generations between moves.
    pub period: u64,
    /// Number of cones (moving peaks only).
    pub peaks: usize,
    pub height_range: [f64; 2],
    pub width_range: [f64; 2],
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Sphere,
            severity: 0.0,
            period: 50,
            peaks: 5,
            height_range: [30.0, 70.0],
            width_range: [1.0, 12.0],
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProblem(m.to_string()));
        if !(self.severity >= 0.0 && self.severity.is_finite()) {
            return bad("severity must be ≥ 0");
        }
        if self.period < 1 {
            return bad("period must be ≥ 1");
        }
        if self.peaks < 1 {
            return bad("peaks must be ≥ 1");
        }
        let [hl, hh] = self.height_range;
        let [wl, wh] = self.width_range;
        if !(hl <= hh && wl <= wh && wl >= 0.0) {
            return bad("height_range and width_range must be ordered, widths ≥ 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cone {
    apex: Vec<f64>,
    height: f64,
    width: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Landscape {
    /// Squared distance to the center.
    Sphere { centers: Vec<Vec<f64>> },
    /// Negated max-of-cones.
    Peaks { states: Vec<Vec<Cone>> },
    /// Rastrigin around a moving optimum.
    Rastrigin { optima: Vec<Vec<f64>> },
}

/// One of the built-in moving benchmarks with its full change schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    config: ProblemConfig,
    bounds: Bounds,
    landscape: Landscape,
}

fn reflect(x: f64, iv: Interval) -> f64 {
    let mut y = x;
    if y > iv.high {
        y = 2.0 * iv.high - y;
    }
    if y < iv.low {
        y = 2.0 * iv.low - y;
    }
    iv.clamp(y)
}

/// Random vector of euclidean length `norm`, added to `point` and reflected into `bounds`.
fn shift(point: &[f64], norm: f64, bounds: &Bounds, stream: &mut RandomStream) -> Vec<f64> {
    if norm == 0.0 {
        return point.to_vec();
    }
    let mut dir: Vec<f64> = (0..point.len()).map(|_| stream.normal()).collect();
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len == 0.0 {
        dir[0] = 1.0;
    } else {
        dir.iter_mut().for_each(|v| *v /= len);
    }
    point
        .iter()
        .zip(&dir)
        .zip(bounds.intervals())
        .map(|((p, d), iv)| reflect(p + norm * d, *iv))
        .collect()
}

impl Benchmark {
    /// Build the landscape and draw `horizon` scheduled moves from `seed`.
    pub fn new(config: ProblemConfig, dimension: usize, seed: u64, horizon: u64) -> Result<Self> {
        config.validate()?;
        if dimension == 0 {
            return Err(Error::InvalidProblem("dimension must be ≥ 1".into()));
        }
        let steps = horizon as usize + 1;
        let landscape;
        let bounds;
        match config.kind {
            ProblemKind::Sphere | ProblemKind::Rastrigin => {
                bounds = if config.kind == ProblemKind::Sphere {
                    Bounds::uniform(dimension, -5.0, 5.0)
                } else {
                    Bounds::uniform(dimension, -5.12, 5.12)
                };
                let mut points = Vec::with_capacity(steps);
                points.push(vec![0.0; dimension]);
                for t in 1..steps {
                    let mut s = derive_stream(seed, &format!("problem/shift/{t}"));
                    let next = shift(&points[t - 1], config.severity, &bounds, &mut s);
                    points.push(next);
                }
                landscape = if config.kind == ProblemKind::Sphere {
                    Landscape::Sphere { centers: points }
                } else {
                    Landscape::Rastrigin { optima: points }
                };
            }
            ProblemKind::Peaks => {
                bounds = Bounds::uniform(dimension, 0.0, 100.0);
                let mut init = derive_stream(seed, "problem/peaks/init");
                let [hl, hh] = config.height_range;
                let [wl, wh] = config.width_range;
                let first: Vec<Cone> = (0..config.peaks)
                    .map(|_| Cone {
                        apex: bounds
                            .intervals()
                            .iter()
                            .map(|iv| init.uniform(iv.low, iv.high))
                            .collect(),
                        height: init.uniform(hl, hh),
                        width: init.uniform(wl, wh),
                    })
                    .collect();
                let mut states = Vec::with_capacity(steps);
                states.push(first);
                for t in 1..steps {
                    let mut s = derive_stream(seed, &format!("problem/shift/{t}"));
                    let next = states[t - 1]
                        .iter()
                        .map(|c: &Cone| Cone {
                            apex: shift(&c.apex, config.severity, &bounds, &mut s),
                            ..c.clone()
                        })
                        .collect();
                    states.push(next);
                }
                landscape = Landscape::Peaks { states };
            }
        }
        Ok(Self {
            config,
            bounds,
            landscape,
        })
    }

    /// A benchmark whose schedule covers every generation of a run.
    pub fn for_run(config: ProblemConfig, dimension: usize, seed: u64, generations: u64) -> Result<Self> {
        let horizon = generations / config.period.max(1);
        Self::new(config, dimension, seed, horizon)
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    fn state_index(len: usize, t: u64) -> usize {
        (t as usize).min(len - 1)
    }

    /// Location of the global optimum at time `t`.
    pub fn optimum_location(&self, t: u64) -> Genome {
        match &self.landscape {
            Landscape::Sphere { centers: p } | Landscape::Rastrigin { optima: p } => {
                Genome::new(p[Self::state_index(p.len(), t)].clone())
            }
            Landscape::Peaks { states } => {
                let cones = &states[Self::state_index(states.len(), t)];
                let top = cones
                    .iter()
                    .fold(&cones[0], |a, c| if c.height > a.height { c } else { a });
                Genome::new(top.apex.clone())
            }
        }
    }

    /// Apex and height of every cone at time `t` (empty for non-peak landscapes).
    pub fn peaks(&self, t: u64) -> Vec<(Genome, f64)> {
        match &self.landscape {
            Landscape::Peaks { states } => states[Self::state_index(states.len(), t)]
                .iter()
                .map(|c| (Genome::new(c.apex.clone()), c.height))
                .collect(),
            _ => Vec::new(),
        }
    }
}

impl DynamicProblem for Benchmark {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, genome: &Genome, t: u64) -> f64 {
        let x = genome.values();
        match &self.landscape {
            Landscape::Sphere { centers } => {
                let c = &centers[Self::state_index(centers.len(), t)];
                x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
            }
            Landscape::Rastrigin { optima } => {
                let o = &optima[Self::state_index(optima.len(), t)];
                let tau = std::f64::consts::TAU;
                10.0 * x.len() as f64
                    + x.iter()
                        .zip(o)
                        .map(|(a, b)| {
                            let z = a - b;
                            z * z - 10.0 * (tau * z).cos()
                        })
                        .sum::<f64>()
            }
            Landscape::Peaks { states } => {
                let cones = &states[Self::state_index(states.len(), t)];
                let top = cones
                    .iter()
                    .map(|c| {
                        let d = x
                            .iter()
                            .zip(&c.apex)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        c.height - c.width * d
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                -top
            }
        }
    }

    fn known_optimum(&self, t: u64) -> Option<f64> {
        match &self.landscape {
            Landscape::Sphere { .. } | Landscape::Rastrigin { .. } => Some(0.0),
            Landscape::Peaks { states } => {
                let cones = &states[Self::state_index(states.len(), t)];
                Some(-cones.iter().map(|c| c.height).fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    fn time_step(&self, generation: u64) -> u64 {
        generation / self.config.period
    }
}

/// Fixed probe points re-evaluated every generation to detect landscape movement.
#[derive(Debug, Clone, PartialEq)]
pub struct SentinelSet {
    sentinels: Vec<Genome>,
    last_values: Vec<f64>,
}

impl SentinelSet {
    /// Sample `count` sentinels uniformly in bounds and evaluate them at `t`.
    pub fn sample<P: DynamicProblem + ?Sized>(problem: &P, count: usize, t: u64, stream: &mut RandomStream) -> Self {
        let sentinels: Vec<Genome> = (0..count)
            .map(|_| {
                Genome::new(
                    problem
                        .bounds()
                        .intervals()
                        .iter()
                        .map(|iv| stream.uniform(iv.low, iv.high))
                        .collect(),
                )
            })
            .collect();
        Self::from_genomes(problem, sentinels, t)
    }

    pub fn from_genomes<P: DynamicProblem + ?Sized>(problem: &P, sentinels: Vec<Genome>, t: u64) -> Self {
        let last_values = sentinels.iter().map(|g| problem.evaluate(g, t)).collect();
        Self { sentinels, last_values }
    }

    pub fn len(&self) -> usize {
        self.sentinels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentinels.is_empty()
    }

    pub fn sentinels(&self) -> &[Genome] {
        &self.sentinels
    }

    pub fn last_values(&self) -> &[f64] {
        &self.last_values
    }
}

/// Fraction of sentinels whose value moved by more than `tolerance` since the last call.
pub fn detect_change<P: DynamicProblem + ?Sized>(
    problem: &P,
    sentinels: &mut SentinelSet,
    t: u64,
    tolerance: f64,
) -> f64 {
    if sentinels.is_empty() {
        return 0.0;
    }
    let mut changed = 0usize;
    for (g, last) in sentinels.sentinels.iter().zip(sentinels.last_values.iter_mut()) {
        let now = problem.evaluate(g, t);
        if (now - *last).abs() > tolerance {
            changed += 1;
        }
        *last = now;
    }
    changed as f64 / sentinels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench(kind: ProblemKind, dim: usize, severity: f64, period: u64) -> Benchmark {
        let cfg = ProblemConfig {
            kind,
            severity,
            period,
            ..ProblemConfig::default()
        };
        Benchmark::new(cfg, dim, 42, 20).unwrap()
    }

    #[test]
    fn sphere_hand_value() {
        let p = bench(ProblemKind::Sphere, 2, 1.0, 5);
        assert_eq!(p.evaluate(&Genome::new(vec![3.0, 4.0]), 0), 25.0);
    }

    #[test]
    fn sphere_is_zero_at_center_every_step() {
        let p = bench(ProblemKind::Sphere, 4, 0.7, 5);
        for t in 0..20 {
            assert_eq!(p.evaluate(&p.optimum_location(t), t), 0.0);
        }
        assert_ne!(p.optimum_location(0), p.optimum_location(1));
        let moved = p.optimum_location(0).distance(&p.optimum_location(1));
        assert!((moved - 0.7).abs() < 1e-12, "{moved}");
    }

    #[test]
    fn zero_severity_is_static() {
        for kind in [ProblemKind::Sphere, ProblemKind::Peaks, ProblemKind::Rastrigin] {
            let p = bench(kind, 3, 0.0, 2);
            let x = Genome::new(vec![1.25, -0.5, 3.0]);
            let v0 = p.evaluate(&x, 0);
            for t in 1..30 {
                assert_eq!(p.evaluate(&x, t), v0);
            }
        }
    }

    #[test]
    fn static_rastrigin_matches_textbook_values() {
        let p = bench(ProblemKind::Rastrigin, 3, 0.0, 1);
        assert_eq!(p.evaluate(&Genome::new(vec![0.0; 3]), 0), 0.0);
        // 30 + (0.25 + 10) - 10 - 10
        let v = p.evaluate(&Genome::new(vec![0.5, 0.0, 0.0]), 0);
        assert!((v - 20.25).abs() < 1e-12, "{v}");
    }

    #[test]
    fn rastrigin_unit_offset_is_one() {
        let p = bench(ProblemKind::Rastrigin, 4, 0.3, 1);
        for t in [0, 3, 7] {
            let mut x = p.optimum_location(t);
            assert!(p.evaluate(&x, t).abs() < 1e-12);
            x.values_mut()[0] += 1.0;
            assert!((p.evaluate(&x, t) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn peaks_apexes_and_minimum() {
        let cfg = ProblemConfig {
            kind: ProblemKind::Peaks,
            peaks: 5,
            severity: 1.0,
            ..ProblemConfig::default()
        };
        let p = Benchmark::new(cfg, 2, 3, 4).unwrap();
        let peaks = p.peaks(0);
        let top = peaks.iter().map(|(_, h)| *h).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(p.known_optimum(0), Some(-top));
        // the tallest apex attains the optimum
        let best = peaks
            .iter()
            .map(|(apex, _)| p.evaluate(apex, 0))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best, -top);
        for (apex, h) in &peaks {
            assert!(p.evaluate(apex, 0) <= -h);
        }
    }

    #[test]
    fn single_peak_apex_is_minus_height() {
        let cfg = ProblemConfig {
            kind: ProblemKind::Peaks,
            peaks: 1,
            ..ProblemConfig::default()
        };
        let p = Benchmark::new(cfg, 3, 5, 0).unwrap();
        let (apex, h) = p.peaks(0).remove(0);
        assert_eq!(p.evaluate(&apex, 0), -h);
    }

    #[test]
    fn detect_change_static_and_total() {
        let p = bench(ProblemKind::Sphere, 3, 0.0, 1);
        let mut s = SentinelSet::sample(&p, 10, 0, &mut derive_stream(1, "sentinels"));
        assert_eq!(detect_change(&p, &mut s, 1, 1e-9), 0.0);

        let q = bench(ProblemKind::Sphere, 3, 2.0, 1);
        let mut s = SentinelSet::sample(&q, 10, 0, &mut derive_stream(1, "sentinels"));
        assert_eq!(detect_change(&q, &mut s, 1, 1e-9), 1.0);
        // values are now current: a second look at the same step sees nothing
        assert_eq!(detect_change(&q, &mut s, 1, 1e-9), 0.0);
    }

    #[test]
    fn time_step_follows_period() {
        let p = bench(ProblemKind::Sphere, 2, 1.0, 10);
        assert_eq!(p.time_step(0), 0);
        assert_eq!(p.time_step(9), 0);
        assert_eq!(p.time_step(10), 1);
        assert_eq!(p.time_step(35), 3);
    }

    #[test]
    fn past_horizon_freezes() {
        let p = bench(ProblemKind::Sphere, 2, 1.0, 1);
        let x = Genome::new(vec![0.1, 0.2]);
        assert_eq!(p.evaluate(&x, 20), p.evaluate(&x, 500));
    }

    #[test]
    fn invalid_problem_rejected() {
        let cfg = ProblemConfig {
            period: 0,
            ..ProblemConfig::default()
        };
        assert!(Benchmark::new(cfg, 2, 1, 1).is_err());
        assert!("bogus".parse::<ProblemKind>().is_err());
        assert_eq!("peaks".parse::<ProblemKind>(), Ok(ProblemKind::Peaks));
    }
}
