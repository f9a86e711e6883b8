mod args;

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::Parser;
use rayon::prelude::*;

use revolutionary::metrics::{hegemon_turnovers, load_json, save_csv, save_json, summarize, write_summary_csv};
use revolutionary::{detect_stages, execute, offline_error, Algorithm, Engine, Error, RunConfig, RunRecord};

use args::{flag_for, Cli, Command, Common, Settings};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, algo, seed } => run(&common, algo, seed),
        Command::Compare { common, algo, seeds } => compare(&common, &algo, &seeds.0),
        Command::Stages { records, threshold } => stages(&records, threshold),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Rewrite config violations in terms of the flags that set them.
fn explain(err: Error) -> anyhow::Error {
    match err {
        Error::InvalidConfig(violations) => {
            let parts: Vec<String> = violations
                .iter()
                .map(|v| match flag_for(v.field) {
                    Some(flag) => format!("{flag}: {v}"),
                    None => v.to_string(),
                })
                .collect();
            anyhow!("invalid configuration: {}", parts.join("; "))
        }
        Error::InvalidProblem(msg) => anyhow!("invalid problem: {msg}"),
        other => other.into(),
    }
}

fn execute_one(algo: Algorithm, settings: &Settings, seed: u64, engine: &Engine) -> Result<RunRecord> {
    let cfg = RunConfig {
        seed,
        ..settings.run.clone()
    };
    execute(algo, &cfg, &settings.problem, engine).map_err(explain)
}

fn record_stem(record: &RunRecord) -> String {
    format!("{}_seed{}", record.algorithm, record.config.seed)
}

/// Files written so far; removed again unless the command completes.
struct Outputs {
    written: Vec<PathBuf>,
    done: bool,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("--out: cannot create {}", dir.display()))?;
        Ok(Self {
            written: Vec::new(),
            done: false,
        })
    }

    fn record(&mut self, dir: &Path, record: &RunRecord) -> Result<()> {
        let stem = record_stem(record);
        let json = dir.join(format!("{stem}.json"));
        self.written.push(json.clone());
        save_json(record, &json)?;
        let csv = dir.join(format!("{stem}.csv"));
        self.written.push(csv.clone());
        save_csv(record, &csv)?;
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.done {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}

fn run(common: &Common, algo: Option<Algorithm>, seed: Option<u64>) -> Result<()> {
    let settings = common.resolve()?;
    let algo = settings.algorithm(algo.or(settings.algo).unwrap_or(Algorithm::Revolutionary));
    let seed = seed.unwrap_or(settings.run.seed);
    let record = execute_one(algo, &settings, seed, &Engine::with_workers(common.workers))?;

    let mut out = Outputs::new(&common.out)?;
    out.record(&common.out, &record)?;
    out.done = true;

    let stem = record_stem(&record);
    println!(
        "{stem}: final best {} after {} generations, offline error {}",
        record.final_best.fitness,
        record.config.generations,
        offline_error(&record).map_or("n/a".into(), |e| e.to_string())
    );
    println!("wrote {}", common.out.join(format!("{stem}.{{json,csv}}")).display());
    Ok(())
}

fn compare(common: &Common, algos: &[Algorithm], seeds: &[u64]) -> Result<()> {
    let settings = common.resolve()?;
    let algos: Vec<Algorithm> = algos.iter().map(|&a| settings.algorithm(a)).collect();
    let jobs: Vec<(Algorithm, u64)> = algos.iter().flat_map(|&a| seeds.iter().map(move |&s| (a, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.workers)
        .build()
        .context("--workers")?;
    let engine = Engine::default();
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, s)| execute_one(a, &settings, s, &engine))
            .collect::<Result<_>>()
    })?;

    let mut out = Outputs::new(&common.out)?;
    for r in &records {
        out.record(&common.out, r)?;
    }
    let mut summary = Vec::new();
    for a in &algos {
        let errors: Vec<f64> = records
            .iter()
            .filter(|r| r.algorithm == *a)
            .map(|r| offline_error(r).context("problem has no known optimum"))
            .collect::<Result<_>>()?;
        summary.push(summarize(a.short_name(), &errors));
    }
    let path = common.out.join("summary.csv");
    out.written.push(path.clone());
    let file = File::create(&path).with_context(|| path.display().to_string())?;
    write_summary_csv(&summary, file)?;
    out.done = true;

    println!("{:<9} {:>5} {:>14} {:>10}", "algorithm", "runs", "median_error", "iqr");
    for s in &summary {
        println!("{:<9} {:>5} {:>14.6} {:>10.6}", s.algorithm, s.runs, s.median, s.iqr());
    }
    println!("wrote {} records and {}", records.len(), path.display());
    Ok(())
}

fn stages(paths: &[PathBuf], threshold: f64) -> Result<()> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(anyhow!("--threshold must be in (0.5, 1], got {threshold}"));
    }
    let show = |g: Option<u64>| g.map_or("-".to_string(), |g| g.to_string());
    for path in paths {
        let record = load_json(path)?;
        let s = detect_stages(&record, threshold);
        println!(
            "{}: formation {} dissidence {} turnover {} (all turnovers: {:?})",
            path.display(),
            show(s.formation),
            show(s.dissidence),
            show(s.turnover),
            hegemon_turnovers(&record)
        );
    }
    Ok(())
}
