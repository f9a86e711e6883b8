//! Run records, offline error and lifecycle stage detection.
//!
//! A [`RunRecord`] is written twice: as a JSON document holding everything,
//! and as a flat CSV of the per-generation rows with the fixed column order
//! of [`CSV_COLUMNS`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::Algorithm;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::problems::ProblemConfig;
use crate::types::{BeliefId, Exemplar};

pub const CSV_COLUMNS: [&str; 11] = [
    "generation",
    "time_step",
    "best_fitness",
    "offline_error",
    "n_systems",
    "hegemon_id",
    "hegemon_share",
    "dp",
    "div",
    "foundings",
    "deletions",
];

/// Default follower share at which a hegemon counts as formed.
pub const HEGEMON_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRow {
    pub generation: u64,
    pub time_step: u64,
    /// Best fitness in the population at this generation.
    pub best_fitness: f64,
    pub known_optimum: Option<f64>,
    /// Running mean of `best_fitness - known_optimum` up to this row.
    pub offline_error: Option<f64>,
    pub n_systems: usize,
    pub hegemon_id: BeliefId,
    pub hegemon_share: f64,
    pub dp: f64,
    pub div: f64,
    pub foundings: usize,
    pub deletions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    Change {
        generation: u64,
        time_step: u64,
        dp: f64,
    },
    HegemonTransition {
        generation: u64,
        from: BeliefId,
        to: BeliefId,
    },
    Founded {
        generation: u64,
        id: BeliefId,
        founder_fitness: f64,
    },
    Deleted {
        generation: u64,
        id: BeliefId,
    },
    /// Every system lost its followers and one was kept regardless.
    GuardRetained {
        generation: u64,
        id: BeliefId,
    },
    Migration {
        generation: u64,
        moved: usize,
    },
    Restart {
        generation: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub config: RunConfig,
    /// Present when the run used one of the built-in benchmarks.
    pub problem: Option<ProblemConfig>,
    pub rows: Vec<GenerationRow>,
    pub events: Vec<RunEvent>,
    pub final_best: Exemplar,
}

/// Appends rows while keeping the running offline error.
#[derive(Debug, Clone, Default)]
pub struct OfflineErrorAccumulator {
    gap_sum: f64,
    count: u64,
    known: bool,
}

impl OfflineErrorAccumulator {
    pub fn new() -> Self {
        Self {
            gap_sum: 0.0,
            count: 0,
            known: true,
        }
    }

    /// Add one generation and return the running mean, if every optimum so far was known.
    pub fn push(&mut self, best_fitness: f64, optimum: Option<f64>) -> Option<f64> {
        match optimum {
            Some(opt) if self.known => {
                self.gap_sum += best_fitness - opt;
                self.count += 1;
                Some(self.gap_sum / self.count as f64)
            }
            _ => {
                self.known = false;
                None
            }
        }
    }
}

/// Mean over generations of `best_fitness - known_optimum`, or `None` when
/// any generation lacks a known optimum or the record is empty.
pub fn offline_error(record: &RunRecord) -> Option<f64> {
    offline_error_of_rows(&record.rows)
}

pub fn offline_error_of_rows(rows: &[GenerationRow]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for r in rows {
        sum += r.best_fitness - r.known_optimum?;
    }
    Some(sum / rows.len() as f64)
}

/// Generations at which each lifecycle stage was first observed.
///
/// Stages are searched in sequence, each strictly after the previous one, so
/// present indices are always increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageReport {
    /// First generation with hegemon share ≥ threshold.
    pub formation: Option<u64>,
    /// First generation after formation at which a dissident system is founded.
    pub dissidence: Option<u64>,
    /// First hegemon change after the dissidence onset.
    pub turnover: Option<u64>,
}

impl StageReport {
    /// Present stages appear in lifecycle order.
    pub fn is_ordered(&self) -> bool {
        let present: Vec<u64> = [self.formation, self.dissidence, self.turnover]
            .into_iter()
            .flatten()
            .collect();
        present.windows(2).all(|w| w[0] < w[1])
    }

    pub fn is_complete(&self) -> bool {
        self.formation.is_some() && self.dissidence.is_some() && self.turnover.is_some()
    }
}

pub fn detect_stages(record: &RunRecord, threshold: f64) -> StageReport {
    detect_stages_in_rows(&record.rows, threshold)
}

pub fn detect_stages_in_rows(rows: &[GenerationRow], threshold: f64) -> StageReport {
    let mut report = StageReport::default();
    let Some(f) = rows.iter().position(|r| r.hegemon_share >= threshold) else {
        return report;
    };
    report.formation = Some(rows[f].generation);
    let Some(d) = (f + 1..rows.len()).find(|&k| rows[k].foundings > 0) else {
        return report;
    };
    report.dissidence = Some(rows[d].generation);
    report.turnover = (d + 1..rows.len())
        .find(|&k| rows[k].hegemon_id != rows[k - 1].hegemon_id)
        .map(|k| rows[k].generation);
    report
}

/// Every generation at which the hegemon changed identity.
pub fn hegemon_turnovers(record: &RunRecord) -> Vec<u64> {
    record
        .rows
        .windows(2)
        .filter(|w| w[0].hegemon_id != w[1].hegemon_id)
        .map(|w| w[1].generation)
        .collect()
}

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Write the per-generation rows as CSV.
pub fn write_csv<W: Write>(record: &RunRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &record.rows {
        w.write_record([
            r.generation.to_string(),
            r.time_step.to_string(),
            r.best_fitness.to_string(),
            opt_field(r.offline_error),
            r.n_systems.to_string(),
            r.hegemon_id.to_string(),
            r.hegemon_share.to_string(),
            r.dp.to_string(),
            r.div.to_string(),
            r.foundings.to_string(),
            r.deletions.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(record: &RunRecord) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(record, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_csv(record, BufWriter::new(file))
}

pub fn save_json(record: &RunRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, record)?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn load_json(path: &Path) -> Result<RunRecord> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Offline-error statistics of one algorithm over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub runs: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl SummaryRow {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and quartiles of the offline error of each group of values.
pub fn summarize(algorithm: &str, offline_errors: &[f64]) -> SummaryRow {
    let mut v = offline_errors.to_vec();
    v.sort_by(f64::total_cmp);
    SummaryRow {
        algorithm: algorithm.to_string(),
        runs: v.len(),
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "runs", "median_offline_error", "q1", "q3", "iqr"])?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.runs.to_string(),
            r.median.to_string(),
            r.q1.to_string(),
            r.q3.to_string(),
            r.iqr().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
