//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use revolutionary::allegiance::{allegiance_distribution, Census, CensusEntry, Choice};
use revolutionary::metrics::{csv_string, hegemon_turnovers, summarize, SummaryRow};
use revolutionary::problems::{Benchmark, ProblemConfig, ProblemKind};
use revolutionary::{
    detect_stages, diversity, execute, offline_error, run_baseline, run_on, spawn_probability, validate_config,
    Algorithm, BeliefId, DynamicProblem, Dynamics, Engine, Genome, RandomStream, RunConfig, RunRecord,
    HEGEMON_THRESHOLD,
};

const EPS_R: f64 = 1e-12;
const SEEDS: std::ops::RangeInclusive<u64> = 1..=20;

struct Outcome {
    pass: bool,
    detail: String,
}

/// `shared` is time already spent on runs the criterion reuses.
fn check(name: &str, limit: Duration, shared: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed() + shared;
    let in_time = elapsed < limit;
    let pass = out.pass && in_time;
    println!(
        "{} {name}: {} [{:.2}s, limit {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" },
    );
    pass
}

fn stream(label: &str) -> RandomStream {
    revolutionary::derive_stream(2024, label)
}

/// Allegiance weights n_i r_i / (N r_j) plus the spawn weight, normalized.
fn allegiance_oracle(shares: &[f64], rates: &[f64], j: usize, spawn: f64) -> Vec<f64> {
    let n = shares.len() as f64;
    let mut w = Vec::with_capacity(shares.len() + 1);
    for i in 0..shares.len() {
        w.push(shares[i] * rates[i] / (n * rates[j]));
    }
    w.push(spawn);
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn criterion_1() -> Outcome {
    let mut s = stream("acceptance/1");
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 1 + s.index(10);
        let counts: Vec<usize> = (0..n).map(|_| 1 + s.index(100)).collect();
        let total: usize = counts.iter().sum();
        let rates: Vec<f64> = (0..n).map(|_| s.uniform(EPS_R, 10.0)).collect();
        let j = s.index(n);
        let spawn = s.uniform(0.0, 1.0);
        let census = Census::new(
            (0..n)
                .map(|k| CensusEntry {
                    id: BeliefId(k as u64),
                    followers: counts[k],
                    rate: rates[k],
                    best_fitness: 0.0,
                })
                .collect(),
        );
        let d = allegiance_distribution(&census, BeliefId(j as u64), spawn);
        let shares: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let oracle = allegiance_oracle(&shares, &rates, j, spawn);
        for (k, expected) in oracle[..n].iter().enumerate() {
            worst = worst.max((d.probability(Choice::Join(BeliefId(k as u64))) - expected).abs());
        }
        worst = worst.max((d.probability(Choice::FoundNew) - oracle[n]).abs());
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("1000 censuses, max deviation {worst:.2e}"),
    }
}

fn random_set(s: &mut RandomStream, count: usize, dim: usize) -> Vec<Genome> {
    (0..count)
        .map(|_| Genome::new((0..dim).map(|_| s.uniform(-10.0, 10.0)).collect()))
        .collect()
}

fn criterion_2() -> Outcome {
    let mut s = stream("acceptance/2");
    let mut failures = Vec::new();

    for _ in 0..1000 {
        let dim = 1 + s.index(6);
        let pair = random_set(&mut s, 2, dim);
        if diversity(&pair) != 1.0 {
            failures.push("pair");
            break;
        }
    }
    let h = 3f64.sqrt() / 2.0;
    let tri = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]].map(Genome::new);
    if (diversity(&tri) - 1.0 / 3.0).abs() > 1e-12 {
        failures.push("equilateral");
    }
    let line = [vec![0.0], vec![1.0], vec![2.0]].map(Genome::new);
    if diversity(&line) != 0.5 {
        failures.push("collinear");
    }
    for _ in 0..1000 {
        let count = 2 + s.index(9);
        let dim = 1 + s.index(6);
        let set = random_set(&mut s, count, dim);
        let div = diversity(&set);
        if !(div > 0.0 && div <= 1.0) {
            failures.push("bounds");
            break;
        }
        let k = s.uniform(0.01, 100.0);
        let scaled: Vec<Genome> = set
            .iter()
            .map(|g| Genome::new(g.values().iter().map(|x| x * k).collect()))
            .collect();
        if (diversity(&scaled) - div).abs() > 1e-12 {
            failures.push("scale");
            break;
        }
    }
    for a in 0..=20 {
        for b in 0..=20 {
            let (dp, div) = (a as f64 / 20.0, b as f64 / 20.0);
            if spawn_probability(dp, div) != dp * div {
                failures.push("P(S)");
            }
        }
    }
    failures.dedup();
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "pairs, equilateral, collinear, 1000 random sets, spawn probability grid".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    }
}

fn criterion_3() -> Outcome {
    let cases: Vec<(ProblemKind, f64, u64)> = [ProblemKind::Sphere, ProblemKind::Peaks, ProblemKind::Rastrigin]
        .into_iter()
        .flat_map(|kind| {
            let severity = if kind == ProblemKind::Peaks { 5.0 } else { 0.5 };
            (1..=5u64).flat_map(move |seed| [(kind, severity, seed), (kind, 0.0, seed)])
        })
        .collect();
    let violations: Vec<String> = cases
        .par_iter()
        .flat_map(|&(kind, severity, seed)| {
            let run = RunConfig {
                population_size: 100,
                generations: 500,
                seed,
                ..RunConfig::default()
            };
            let cfg = validate_config(run.clone()).unwrap();
            let pc = ProblemConfig {
                kind,
                severity,
                ..ProblemConfig::default()
            };
            let p = Benchmark::for_run(pc, run.dimension, seed, run.generations).unwrap();
            let mut bad = Vec::new();
            let mut prev_best = f64::INFINITY;
            Engine::default()
                .run_observed(&cfg, &p, Dynamics::Revolutionary, |w, ev| {
                    let c = w.census();
                    let tag = format!("{kind} sev {severity} seed {seed} gen {}", ev.generation);
                    if c.entries().iter().map(|e| e.followers).sum::<usize>() != 100 {
                        bad.push(format!("{tag}: followers not conserved"));
                    }
                    let h = c.get(c.hegemon()).map_or(0, |e| e.followers);
                    if c.entries().iter().any(|e| e.followers > h) {
                        bad.push(format!("{tag}: hegemon not maximal"));
                    }
                    if c.entries().iter().any(|e| e.followers == 0) || w.systems().len() != c.len() {
                        bad.push(format!("{tag}: zero-follower survivor"));
                    }
                    let best = w.best().fitness;
                    if severity == 0.0 && best > prev_best {
                        bad.push(format!("{tag}: best worsened"));
                    }
                    prev_best = best;
                })
                .unwrap();
            bad
        })
        .collect();
    Outcome {
        pass: violations.is_empty(),
        detail: match violations.first() {
            None => format!("{} runs of 500 generations", cases.len()),
            Some(v) => format!("{} violations, first: {v}", violations.len()),
        },
    }
}

fn criterion_4() -> Outcome {
    let cfg = RunConfig {
        population_size: 200,
        generations: 200,
        seed: 42,
        ..RunConfig::default()
    };
    let p = ProblemConfig {
        kind: ProblemKind::Peaks,
        severity: 10.0,
        period: 40,
        ..ProblemConfig::default()
    };
    let texts: Vec<String> = [1, 2, 8]
        .into_iter()
        .map(|w| csv_string(&execute(Algorithm::Revolutionary, &cfg, &p, &Engine::with_workers(w)).unwrap()).unwrap())
        .collect();
    let same = texts.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        pass: same,
        detail: format!(
            "workers 1, 2, 8: CSV {}",
            if same { "byte-identical" } else { "differs" }
        ),
    }
}

fn criterion_5() -> Outcome {
    let p = ProblemConfig {
        kind: ProblemKind::Peaks,
        severity: 5.0,
        period: 50,
        ..ProblemConfig::default()
    };
    let mut equal = 0;
    for seed in 1..=5 {
        let cfg = RunConfig {
            generations: 300,
            seed,
            ..RunConfig::default()
        };
        let reduced = RunConfig {
            initial_belief_count: 1,
            spawning: false,
            ..cfg.clone()
        };
        let bench = Benchmark::for_run(p.clone(), cfg.dimension, seed, cfg.generations).unwrap();
        let engine = Engine::default();
        let a = run_on(Algorithm::Revolutionary, &reduced, &bench, &engine).unwrap();
        let b = run_baseline(Algorithm::StaticCa, &cfg, &bench, &engine).unwrap();
        if a.rows == b.rows && a.events == b.events && a.final_best == b.final_best {
            equal += 1;
        }
    }
    Outcome {
        pass: equal == 5,
        detail: format!("{equal}/5 seeds identical"),
    }
}

const CHANGE_AT: u64 = 300;

fn scenario_config(seed: u64) -> RunConfig {
    RunConfig {
        population_size: 200,
        dimension: 5,
        generations: 600,
        seed,
        ..RunConfig::default()
    }
}

/// Moving peaks with a single abrupt shift at generation 300.
fn scenario_problem(seed: u64) -> Benchmark {
    let pc = ProblemConfig {
        kind: ProblemKind::Peaks,
        severity: 30.0,
        period: CHANGE_AT,
        peaks: 5,
        ..ProblemConfig::default()
    };
    Benchmark::new(pc, 5, seed, 1).unwrap()
}

fn scenario_runs(algorithm: Algorithm) -> Vec<RunRecord> {
    SEEDS
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&seed| {
            run_on(
                algorithm,
                &scenario_config(seed),
                &scenario_problem(seed),
                &Engine::default(),
            )
            .unwrap()
        })
        .collect()
}

fn criterion_6(records: &[RunRecord]) -> Outcome {
    let mut formed = 0;
    let mut turned = 0;
    let mut complete = 0;
    let mut misordered = 0;
    let mut full_change = 0;
    for r in records {
        let change_row = &r.rows[CHANGE_AT as usize];
        if change_row.dp == 1.0 {
            full_change += 1;
        }
        let stages = detect_stages(r, HEGEMON_THRESHOLD);
        if stages.formation.is_some_and(|g| g < CHANGE_AT) {
            formed += 1;
        }
        if hegemon_turnovers(r)
            .iter()
            .any(|&g| (CHANGE_AT..=CHANGE_AT + 100).contains(&g))
        {
            turned += 1;
        }
        if stages.is_complete() {
            complete += 1;
            if !stages.is_ordered() {
                misordered += 1;
            }
        }
    }
    let n = records.len();
    Outcome {
        pass: formed >= 16 && turned >= 15 && misordered == 0 && full_change == n,
        detail: format!(
            "dp = 1 at change in {full_change}/{n}, formation before change {formed}/{n} (need 16), \
             turnover within 100 generations {turned}/{n} (need 15), ordered {}/{complete} complete lifecycles",
            complete - misordered
        ),
    }
}

fn offline_errors(records: &[RunRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| offline_error(r).expect("moving peaks has a known optimum"))
        .collect()
}

fn criterion_7(table: &[SummaryRow]) -> Outcome {
    let ra = table.iter().find(|s| s.algorithm == "ra").unwrap();
    let ca = table.iter().find(|s| s.algorithm == "ca").unwrap();
    println!("  algorithm  runs  median_offline_error        q1        q3       iqr");
    for s in table {
        println!(
            "  {:<9}  {:>4}  {:>20.4}  {:>8.4}  {:>8.4}  {:>8.4}",
            s.algorithm,
            s.runs,
            s.median,
            s.q1,
            s.q3,
            s.iqr()
        );
    }
    Outcome {
        pass: ra.median < ca.median,
        detail: format!("median offline error ra {:.4} vs ca {:.4}", ra.median, ca.median),
    }
}

fn criterion_8() -> Outcome {
    let finals: Vec<f64> = SEEDS
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&seed| {
            let cfg = RunConfig {
                population_size: 100,
                dimension: 10,
                generations: 500,
                seed,
                ..RunConfig::default()
            };
            let p = ProblemConfig {
                kind: ProblemKind::Sphere,
                severity: 0.0,
                ..ProblemConfig::default()
            };
            let bench = Benchmark::for_run(p, 10, seed, 500).unwrap();
            assert_eq!(bench.known_optimum(0), Some(0.0));
            run_on(Algorithm::Revolutionary, &cfg, &bench, &Engine::default())
                .unwrap()
                .final_best
                .fitness
        })
        .collect();
    let good = finals.iter().filter(|&&f| f < 1e-2).count();
    let worst = finals.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: good >= 18,
        detail: format!("{good}/20 seeds below 1e-2 (need 18), worst {worst:.2e}"),
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let none = Duration::ZERO;
    let mut results = vec![
        check("criterion 1 (allegiance oracle)", secs(1), none, criterion_1),
        check(
            "criterion 2 (diversity and spawn probability)",
            secs(1),
            none,
            criterion_2,
        ),
        check("criterion 3 (structural invariants)", secs(60), none, criterion_3),
        check("criterion 4 (determinism across workers)", secs(60), none, criterion_4),
        check("criterion 5 (reduction to static CA)", secs(30), none, criterion_5),
    ];

    let start = Instant::now();
    let ra = scenario_runs(Algorithm::Revolutionary);
    let ra_time = start.elapsed();
    results.push(check("criterion 6 (lifecycle)", secs(300), ra_time, || {
        criterion_6(&ra)
    }));
    results.push(check("criterion 7 (adaptation benefit)", secs(600), ra_time, || {
        let mut table = vec![summarize("ra", &offline_errors(&ra))];
        for algo in ["ca", "restart", "island"] {
            table.push(summarize(algo, &offline_errors(&scenario_runs(algo.parse().unwrap()))));
        }
        criterion_7(&table)
    }));
    results.push(check("criterion 8 (static sphere)", secs(60), none, criterion_8));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
