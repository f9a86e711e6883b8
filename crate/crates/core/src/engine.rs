//! The generation loop.
//!
//! Each call to [`World::step`] runs, in order: change detection, influence
//! and procreation within every subculture, offspring evaluation, belief
//! updates, the spawn signal, allegiance re-sampling (which may found
//! dissidents), deletion of abandoned systems and a fresh census.
//!
//! Procreation and evaluation fan out across worker threads, one task per
//! subculture. Every task draws from its own labeled stream, so the result
//! is identical for any worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allegiance::{allegiance_distribution, sample_allegiance, Census, CensusEntry, Choice};
use crate::belief::BeliefSystem;
use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::metrics::{GenerationRow, OfflineErrorAccumulator, RunEvent, RunRecord};
use crate::problems::{detect_change, DynamicProblem, SentinelSet};
use crate::revolution::{cull, diversity, found_dissident, spawn_weight_for, BeliefIds, SpawnSignal};
use crate::rng::{derive_stream, RandomStream};
use crate::types::{best_index, BeliefId, Exemplar, Genome, Individual};

/// How subcultures interact between generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dynamics {
    /// Allegiance re-sampling, dissident founding and deletion.
    Revolutionary,
    /// Subcultures never change membership; on a detected change the whole
    /// population and every belief system start over.
    Restart,
    /// Fixed subcultures; every `migration_interval` generations each one
    /// sends a copy of its best individual to the next in a ring.
    Islands { migration_interval: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    DetectChange,
    Influence,
    Procreate,
    Evaluate,
    Update,
    Spawn,
    Migrate,
    Allegiance,
    Cull,
    Census,
}

/// What happened during one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationEvents {
    pub generation: u64,
    pub time_step: u64,
    pub phases: Vec<Phase>,
    pub signal: SpawnSignal,
    pub founded: Vec<BeliefId>,
    pub deleted: Vec<BeliefId>,
    pub guard_retained: Option<BeliefId>,
    pub previous_hegemon: BeliefId,
    pub hegemon: BeliefId,
    pub migrated: usize,
    pub restarted: bool,
}

/// Complete state of a run between generations.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    individuals: Vec<Individual>,
    /// Live belief systems in id order.
    systems: Vec<BeliefSystem>,
    census: Census,
    sentinels: SentinelSet,
    generation: u64,
    time_step: u64,
    ids: BeliefIds,
    dynamics: Dynamics,
    last_div: f64,
}

fn random_genome<P: DynamicProblem + ?Sized>(problem: &P, stream: &mut RandomStream) -> Genome {
    Genome::new(
        problem
            .bounds()
            .intervals()
            .iter()
            .map(|iv| stream.uniform(iv.low, iv.high))
            .collect(),
    )
}

fn binary_tournament<'a>(pool: &'a [Individual], stream: &mut RandomStream) -> &'a Individual {
    let a = &pool[stream.index(pool.len())];
    let b = &pool[stream.index(pool.len())];
    if b.fitness < a.fitness {
        b
    } else {
        a
    }
}

fn uniform_crossover(a: &Genome, b: &Genome, stream: &mut RandomStream) -> Genome {
    Genome::new(
        a.values()
            .iter()
            .zip(b.values())
            .map(|(&x, &y)| if stream.chance(0.5) { x } else { y })
            .collect(),
    )
}

/// One generation of one subculture: `parents.len()` offspring from binary
/// tournaments, uniform crossover and belief influence. The best parent
/// replaces the worst offspring when no offspring beats it.
fn procreate<P: DynamicProblem + ?Sized>(
    parents: &[Individual],
    belief: &BeliefSystem,
    problem: &P,
    t: u64,
    cfg: &ValidatedConfig,
    stream: &mut RandomStream,
) -> Vec<Individual> {
    let bounds = problem.bounds();
    let mut offspring: Vec<Individual> = (0..parents.len())
        .map(|_| {
            let p1 = binary_tournament(parents, stream);
            let p2 = binary_tournament(parents, stream);
            let child = if stream.chance(cfg.crossover_rate) {
                uniform_crossover(&p1.genome, &p2.genome, stream)
            } else {
                p1.genome.clone()
            };
            let genome = belief.influence(&child, bounds, stream, cfg.mutation_rate, cfg.influence_scale);
            Individual {
                genome,
                fitness: f64::NAN,
                allegiance: belief.id(),
                age: 0,
            }
        })
        .collect();
    for child in &mut offspring {
        child.fitness = problem.evaluate(&child.genome, t);
    }

    let best_parent = best_index(parents.iter().map(|p| &p.fitness)).expect("non-empty subculture");
    let best_child = best_index(offspring.iter().map(|c| &c.fitness)).expect("non-empty subculture");
    if parents[best_parent].fitness < offspring[best_child].fitness {
        let worst = offspring
            .iter()
            .enumerate()
            .fold(0, |w, (k, c)| if c.fitness > offspring[w].fitness { k } else { w });
        let mut elder = parents[best_parent].clone();
        elder.age += 1;
        offspring[worst] = elder;
    }
    offspring
}

impl World {
    /// Random population, round-robin allegiances, one update per belief system.
    pub fn initialize<P: DynamicProblem + ?Sized>(
        cfg: &ValidatedConfig,
        problem: &P,
        dynamics: Dynamics,
    ) -> Result<Self> {
        if problem.dimension() != cfg.dimension {
            return Err(Error::DimensionMismatch {
                problem: problem.dimension(),
                config: cfg.dimension,
            });
        }
        let t = problem.time_step(0);
        let r = match dynamics {
            Dynamics::Restart => 1,
            _ => cfg.initial_belief_count,
        };
        let mut ids = BeliefIds::new();
        let system_ids: Vec<BeliefId> = (0..r).map(|_| ids.issue()).collect();

        let mut stream = derive_stream(cfg.seed, "init/genomes");
        let individuals: Vec<Individual> = (0..cfg.population_size)
            .map(|k| {
                let genome = random_genome(problem, &mut stream);
                let fitness = problem.evaluate(&genome, t);
                Individual {
                    genome,
                    fitness,
                    allegiance: system_ids[k % r],
                    age: 0,
                }
            })
            .collect();

        let mut systems: Vec<BeliefSystem> = system_ids
            .iter()
            .map(|&id| BeliefSystem::empty(id, problem.bounds(), cfg.improvement_window, 0))
            .collect();
        update_all(&mut systems, &individuals, cfg.elite_fraction, 0)?;

        let sentinels = SentinelSet::sample(
            problem,
            cfg.sentinel_count,
            t,
            &mut derive_stream(cfg.seed, "init/sentinels"),
        );
        let census = take_census(&systems, &individuals, cfg);
        let last_div = diversity(&representatives(&systems));
        Ok(Self {
            individuals,
            systems,
            census,
            sentinels,
            generation: 0,
            time_step: t,
            ids,
            dynamics,
            last_div,
        })
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn systems(&self) -> &[BeliefSystem] {
        &self.systems
    }

    pub fn census(&self) -> &Census {
        &self.census
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn time_step(&self) -> u64 {
        self.time_step
    }

    pub fn dynamics(&self) -> Dynamics {
        self.dynamics
    }

    pub fn best(&self) -> &Individual {
        let k = best_index(self.individuals.iter().map(|i| &i.fitness)).expect("population is non-empty");
        &self.individuals[k]
    }

    /// Indices of the followers of each live system, in system order.
    fn groups(&self) -> Vec<Vec<usize>> {
        let pos: BTreeMap<BeliefId, usize> = self.systems.iter().enumerate().map(|(k, s)| (s.id(), k)).collect();
        let mut groups = vec![Vec::new(); self.systems.len()];
        for (k, ind) in self.individuals.iter().enumerate() {
            groups[pos[&ind.allegiance]].push(k);
        }
        groups
    }

    /// Advance one generation.
    pub fn step<P: DynamicProblem + ?Sized>(
        &mut self,
        problem: &P,
        cfg: &ValidatedConfig,
        pool: &rayon::ThreadPool,
    ) -> Result<GenerationEvents> {
        self.generation += 1;
        let g = self.generation;
        let t = problem.time_step(g);
        self.time_step = t;
        let previous_hegemon = self.census.hegemon();
        let mut phases = vec![Phase::DetectChange];
        let mut restarted = false;

        let dp = detect_change(problem, &mut self.sentinels, t, cfg.change_tolerance);
        if dp > 0.0 {
            if self.dynamics == Dynamics::Restart {
                self.restart(problem, cfg, t)?;
                restarted = true;
            } else {
                for ind in &mut self.individuals {
                    ind.fitness = problem.evaluate(&ind.genome, t);
                }
                for s in &mut self.systems {
                    s.reevaluate(problem, t);
                }
            }
        }

        // influence, procreation and evaluation, one task per subculture
        let groups = self.groups();
        let seed = cfg.seed;
        let tasks: Vec<(Vec<Individual>, &BeliefSystem)> = groups
            .iter()
            .zip(&self.systems)
            .map(|(idx, s)| (idx.iter().map(|&k| self.individuals[k].clone()).collect(), s))
            .collect();
        let broods: Vec<Vec<Individual>> = pool.install(|| {
            tasks
                .par_iter()
                .map(|(parents, belief)| {
                    let mut stream = derive_stream(seed, &format!("gen/{g}/sys/{}/procreate", belief.id()));
                    procreate(parents, belief, problem, t, cfg, &mut stream)
                })
                .collect()
        });
        drop(tasks);
        for (idx, brood) in groups.iter().zip(broods) {
            for (&k, child) in idx.iter().zip(brood) {
                self.individuals[k] = child;
            }
        }
        phases.extend([Phase::Influence, Phase::Procreate, Phase::Evaluate]);

        update_all(&mut self.systems, &self.individuals, cfg.elite_fraction, g)?;
        phases.push(Phase::Update);

        let div = diversity(&representatives(&self.systems));
        self.last_div = div;
        let signal = SpawnSignal::new(dp, div);

        let mut founded = Vec::new();
        let mut migrated = 0;
        match self.dynamics {
            Dynamics::Revolutionary => {
                phases.push(Phase::Spawn);
                founded = self.resample_allegiance(problem, cfg, signal)?;
                phases.push(Phase::Allegiance);
            }
            Dynamics::Islands { migration_interval } => {
                if migration_interval > 0 && g.is_multiple_of(migration_interval) {
                    migrated = self.migrate();
                    phases.push(Phase::Migrate);
                }
            }
            Dynamics::Restart => {}
        }

        let counts = self.follower_counts();
        let outcome = cull(&counts, previous_hegemon);
        self.systems.retain(|s| !outcome.deleted.contains(&s.id()));
        phases.push(Phase::Cull);

        self.census = take_census(&self.systems, &self.individuals, cfg);
        phases.push(Phase::Census);
        self.check_consistency(cfg)?;

        Ok(GenerationEvents {
            generation: g,
            time_step: t,
            phases,
            signal,
            founded,
            deleted: outcome.deleted,
            guard_retained: outcome.guard_retained,
            previous_hegemon,
            hegemon: self.census.hegemon(),
            migrated,
            restarted,
        })
    }

    fn restart<P: DynamicProblem + ?Sized>(&mut self, problem: &P, cfg: &ValidatedConfig, t: u64) -> Result<()> {
        let mut stream = derive_stream(cfg.seed, &format!("gen/{}/restart", self.generation));
        for ind in &mut self.individuals {
            ind.genome = random_genome(problem, &mut stream);
            ind.fitness = problem.evaluate(&ind.genome, t);
            ind.age = 0;
        }
        for s in &mut self.systems {
            *s = BeliefSystem::empty(s.id(), problem.bounds(), cfg.improvement_window, self.generation);
        }
        update_all(
            &mut self.systems,
            &self.individuals,
            cfg.elite_fraction,
            self.generation,
        )
    }

    /// Re-sample every individual's allegiance against the current census,
    /// founding dissident systems where the draw says so.
    fn resample_allegiance<P: DynamicProblem + ?Sized>(
        &mut self,
        problem: &P,
        cfg: &ValidatedConfig,
        signal: SpawnSignal,
    ) -> Result<Vec<BeliefId>> {
        let census = take_census(&self.systems, &self.individuals, cfg);
        let hegemon = census.hegemon();
        let hegemon_rate = census.get(hegemon).map_or(cfg.rate_floor, |e| e.rate);
        let p_spawn = if cfg.spawning { signal.p_spawn } else { 0.0 };
        let boost = if cfg.spawning { cfg.stagnation_boost } else { 0.0 };
        let cap = cfg.max_foundings();

        let groups = self.groups();
        let ids: Vec<BeliefId> = self.systems.iter().map(|s| s.id()).collect();
        let mut founded = Vec::new();
        for (id, members) in ids.iter().zip(&groups) {
            let weight = spawn_weight_for(*id == hegemon, p_spawn, hegemon_rate, cfg.rate_floor, boost);
            let dist = allegiance_distribution(&census, *id, weight);
            let mut stream = derive_stream(cfg.seed, &format!("gen/{}/sys/{id}/allegiance", self.generation));
            for &k in members {
                let mut choice = sample_allegiance(&dist, &mut stream);
                if choice == Choice::FoundNew && founded.len() >= cap {
                    choice = sample_allegiance(&dist.without_founding(Choice::Join(*id)), &mut stream);
                }
                match choice {
                    Choice::Join(target) => self.individuals[k].allegiance = target,
                    Choice::FoundNew => {
                        let system = found_dissident(
                            &mut self.ids,
                            &mut self.individuals[k],
                            cfg.widen,
                            problem.bounds(),
                            cfg.improvement_window,
                            self.generation,
                        );
                        founded.push(system.id());
                        self.systems.push(system);
                    }
                }
            }
        }
        Ok(founded)
    }

    /// Ring migration: each island's best replaces the next island's worst
    /// when it is better. Returns the number of individuals moved.
    fn migrate(&mut self) -> usize {
        let groups = self.groups();
        if groups.len() < 2 {
            return 0;
        }
        let emigrants: Vec<Individual> = groups
            .iter()
            .map(|idx| {
                let k = idx[best_index(idx.iter().map(|&k| &self.individuals[k].fitness)).unwrap()];
                self.individuals[k].clone()
            })
            .collect();
        let mut moved = 0;
        for (src, emigrant) in emigrants.into_iter().enumerate() {
            let dst = (src + 1) % groups.len();
            let idx = &groups[dst];
            let worst = idx.iter().copied().fold(idx[0], |w, k| {
                if self.individuals[k].fitness > self.individuals[w].fitness {
                    k
                } else {
                    w
                }
            });
            if emigrant.fitness < self.individuals[worst].fitness {
                let allegiance = self.individuals[worst].allegiance;
                self.individuals[worst] = Individual { allegiance, ..emigrant };
                moved += 1;
            }
        }
        moved
    }

    fn follower_counts(&self) -> Vec<(BeliefId, usize)> {
        let mut counts: BTreeMap<BeliefId, usize> = self.systems.iter().map(|s| (s.id(), 0)).collect();
        for ind in &self.individuals {
            *counts.entry(ind.allegiance).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }

    fn check_consistency(&self, cfg: &ValidatedConfig) -> Result<()> {
        let fail = |message: String| Error::Contract {
            generation: self.generation,
            message,
        };
        if self.systems.is_empty() {
            return Err(fail("no live belief system".into()));
        }
        if self.systems.windows(2).any(|w| w[0].id() >= w[1].id()) {
            return Err(fail("belief systems out of id order".into()));
        }
        for ind in &self.individuals {
            if self.census.get(ind.allegiance).is_none() {
                return Err(fail(format!("individual follows dead system {}", ind.allegiance)));
            }
        }
        let total: usize = self.census.entries().iter().map(|e| e.followers).sum();
        if total != cfg.population_size || self.individuals.len() != cfg.population_size {
            return Err(fail(format!(
                "census counts {total} followers for a population of {}",
                cfg.population_size
            )));
        }
        Ok(())
    }

    /// Row of metrics describing the current state.
    pub fn row<P: DynamicProblem + ?Sized>(
        &self,
        problem: &P,
        dp: f64,
        foundings: usize,
        deletions: usize,
        offline: &mut OfflineErrorAccumulator,
    ) -> GenerationRow {
        let best = self.best().fitness;
        let known_optimum = problem.known_optimum(self.time_step);
        GenerationRow {
            generation: self.generation,
            time_step: self.time_step,
            best_fitness: best,
            known_optimum,
            offline_error: offline.push(best, known_optimum),
            n_systems: self.census.len(),
            hegemon_id: self.census.hegemon(),
            hegemon_share: self.census.hegemon_share(),
            dp,
            div: self.last_div,
            foundings,
            deletions,
        }
    }
}

fn update_all(
    systems: &mut [BeliefSystem],
    individuals: &[Individual],
    elite_fraction: f64,
    generation: u64,
) -> Result<()> {
    let mut followers: BTreeMap<BeliefId, Vec<&Individual>> = systems.iter().map(|s| (s.id(), Vec::new())).collect();
    for ind in individuals {
        if let Some(v) = followers.get_mut(&ind.allegiance) {
            v.push(ind);
        }
    }
    for s in systems.iter_mut() {
        s.update(&followers[&s.id()], elite_fraction)
            .map_err(|e| Error::Contract {
                generation,
                message: format!("belief system {} updated without followers", e.0),
            })?;
    }
    Ok(())
}

fn representatives(systems: &[BeliefSystem]) -> Vec<Genome> {
    systems
        .iter()
        .filter_map(|s| s.situational().map(|e| e.genome.clone()))
        .collect()
}

fn take_census(systems: &[BeliefSystem], individuals: &[Individual], cfg: &ValidatedConfig) -> Census {
    let mut counts: BTreeMap<BeliefId, usize> = systems.iter().map(|s| (s.id(), 0)).collect();
    for ind in individuals {
        if let Some(c) = counts.get_mut(&ind.allegiance) {
            *c += 1;
        }
    }
    Census::new(
        systems
            .iter()
            .map(|s| CensusEntry {
                id: s.id(),
                followers: counts[&s.id()],
                rate: s.rate_of_improvement(cfg.improvement_window, cfg.rate_floor),
                best_fitness: s.best_fitness(),
            })
            .collect(),
    )
}

/// Runs a world to completion and records it.
#[derive(Debug)]
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Default for Engine {
    fn default() -> Self {
        Self::with_workers(1)
    }
}

impl Engine {
    /// An engine fanning subcultures out over `workers` threads (at least one).
    pub fn with_workers(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("failed to build worker pool");
        Self { pool }
    }

    pub fn pool(&self) -> &rayon::ThreadPool {
        &self.pool
    }

    /// Run `cfg.generations` generations. `observer` sees every generation's events.
    pub fn run_observed<P, F>(
        &self,
        cfg: &ValidatedConfig,
        problem: &P,
        dynamics: Dynamics,
        mut observer: F,
    ) -> Result<RunParts>
    where
        P: DynamicProblem + ?Sized,
        F: FnMut(&World, &GenerationEvents),
    {
        let mut world = World::initialize(cfg, problem, dynamics)?;
        let mut offline = OfflineErrorAccumulator::new();
        let mut rows = vec![world.row(problem, 0.0, 0, 0, &mut offline)];
        let mut events = Vec::new();

        for _ in 0..cfg.generations {
            let ev = world.step(problem, cfg, &self.pool)?;
            let g = ev.generation;
            if ev.signal.dp > 0.0 {
                events.push(RunEvent::Change {
                    generation: g,
                    time_step: ev.time_step,
                    dp: ev.signal.dp,
                });
            }
            if ev.restarted {
                events.push(RunEvent::Restart { generation: g });
            }
            if ev.migrated > 0 || ev.phases.contains(&Phase::Migrate) {
                events.push(RunEvent::Migration {
                    generation: g,
                    moved: ev.migrated,
                });
            }
            for &id in &ev.founded {
                let founder_fitness = world
                    .systems()
                    .iter()
                    .find(|s| s.id() == id)
                    .map_or(f64::NAN, |s| s.best_fitness());
                events.push(RunEvent::Founded {
                    generation: g,
                    id,
                    founder_fitness,
                });
            }
            for &id in &ev.deleted {
                events.push(RunEvent::Deleted { generation: g, id });
            }
            if let Some(id) = ev.guard_retained {
                events.push(RunEvent::GuardRetained { generation: g, id });
            }
            if ev.hegemon != ev.previous_hegemon {
                events.push(RunEvent::HegemonTransition {
                    generation: g,
                    from: ev.previous_hegemon,
                    to: ev.hegemon,
                });
            }
            rows.push(world.row(problem, ev.signal.dp, ev.founded.len(), ev.deleted.len(), &mut offline));
            observer(&world, &ev);
        }

        let best = world.best();
        Ok(RunParts {
            rows,
            events,
            final_best: Exemplar {
                genome: best.genome.clone(),
                fitness: best.fitness,
            },
        })
    }

    pub fn run<P: DynamicProblem + ?Sized>(
        &self,
        cfg: &ValidatedConfig,
        problem: &P,
        dynamics: Dynamics,
    ) -> Result<RunParts> {
        self.run_observed(cfg, problem, dynamics, |_, _| {})
    }
}

/// Output of a run before it is labeled with its algorithm and config echo.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParts {
    pub rows: Vec<GenerationRow>,
    pub events: Vec<RunEvent>,
    pub final_best: Exemplar,
}

impl RunParts {
    pub fn into_record(
        self,
        algorithm: crate::baselines::Algorithm,
        cfg: &ValidatedConfig,
        problem: Option<crate::problems::ProblemConfig>,
    ) -> RunRecord {
        RunRecord {
            algorithm,
            config: cfg.config().clone(),
            problem,
            rows: self.rows,
            events: self.events,
            final_best: self.final_best,
        }
    }
}
