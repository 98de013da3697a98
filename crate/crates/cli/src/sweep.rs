//! Sweep execution and its on-disk artifacts.
//!
//! An output directory holds:
//!
//! - `config.toml`: snapshot of the configuration that produced it
//! - `sweep.csv`: one row per (strategy, sweep point, seed)
//! - `timings.csv`: wall-clock runtime of each row, kept apart so the
//!   other artifacts are reproducible byte for byte
//! - `runs/<strategy>_t<minutes>_s<seed>.json`: service plan, cached runs
//!   per video and the full evaluation report

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use precache_core::metrics::{CacheDecision, EvalReport, Run};
use precache_core::optimizer::{ahap, brute_force, ega, nsp, trim, EgaParams, Problem, StrategyResult};
use precache_core::popularity::derive_seed;
use precache_core::scenario::{budget, ServicePlan};

use crate::config::{ExperimentConfig, Instance, StrategySpec, SweepPoint};
use crate::error::{CliError, Result};

const EGA_STREAM: u64 = 0xE6A;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub entropy: f64,
    pub jitter: f64,
    pub hit_raw: f64,
    pub hit_norm: f64,
    #[serde(skip)]
    pub runtime_ms: f64,
}

/// Cached runs of one video, as 1-based inclusive chunk ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoRuns {
    pub video: usize,
    pub chunks: usize,
    pub runs: Vec<Run>,
}

impl VideoRuns {
    pub fn from_decision(d: &CacheDecision) -> Self {
        Self {
            video: d.video_id(),
            chunks: d.len(),
            runs: d
                .runs()
                .into_iter()
                .map(|r| Run {
                    start: r.start + 1,
                    end: r.end + 1,
                })
                .collect(),
        }
    }

    pub fn to_decision(&self) -> precache_core::Result<CacheDecision> {
        let runs: Vec<Run> = self
            .runs
            .iter()
            .map(|r| {
                if r.start == 0 {
                    return Err(precache_core::Error::invalid("chunk numbers start at 1"));
                }
                Ok(Run {
                    start: r.start - 1,
                    end: r.end - 1,
                })
            })
            .collect::<precache_core::Result<_>>()?;
        CacheDecision::from_runs(self.video, self.chunks, &runs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub strategy: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub plan: ServicePlan,
    pub decisions: Vec<VideoRuns>,
    pub report: EvalReport,
}

impl RunArtifact {
    pub fn file_name(&self) -> String {
        format!("{}_t{}_s{}.json", self.strategy, self.sweep_value, self.seed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<RunArtifact>,
}

/// Runs one configured strategy on a prepared problem.
pub fn run_strategy(
    spec: &StrategySpec,
    problem: &Problem<'_>,
    instance: &Instance,
) -> precache_core::Result<StrategyResult> {
    match spec {
        StrategySpec::Dhpc => trim(problem, &instance.segmentations),
        StrategySpec::Nsp { stride } => nsp(problem, *stride),
        StrategySpec::Ahap => ahap(problem),
        StrategySpec::Ega {
            population,
            generations,
        } => {
            let params = EgaParams {
                population: *population,
                generations: *generations,
            };
            ega(problem, &params, derive_seed(instance.seed, EGA_STREAM))
        }
        StrategySpec::Oracle => brute_force(problem),
    }
}

struct Cell {
    key: (usize, usize, usize),
    row: SweepRow,
    artifact: RunArtifact,
}

fn run_seed(
    config: &ExperimentConfig,
    points: &[SweepPoint],
    seed_index: usize,
    seed: u64,
) -> Result<Vec<Cell>> {
    let grid = config.chunk_grid()?;
    let instance = config.instance(seed)?;
    let mut cells = Vec::with_capacity(points.len() * config.strategies.len());
    for (pi, point) in points.iter().enumerate() {
        let plan = budget(&point.chain, &grid, &instance.catalog)?;
        let problem = Problem::new(&instance.catalog, &instance.series, plan.cache_budget)?;
        for (si, spec) in config.strategies.iter().enumerate() {
            let started = Instant::now();
            let result = run_strategy(spec, &problem, &instance)?;
            let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
            let report = result.report;
            cells.push(Cell {
                key: (pi, seed_index, si),
                row: SweepRow {
                    strategy: spec.name().to_string(),
                    sweep_value: point.value,
                    seed,
                    entropy: report.total_entropy,
                    jitter: report.mean_jitter,
                    hit_raw: report.mean_hit_raw,
                    hit_norm: report.mean_hit_norm,
                    runtime_ms,
                },
                artifact: RunArtifact {
                    strategy: spec.name().to_string(),
                    sweep_value: point.value,
                    seed,
                    plan: plan.clone(),
                    decisions: result.decisions.iter().map(VideoRuns::from_decision).collect(),
                    report,
                },
            });
        }
    }
    Ok(cells)
}

/// Runs every strategy at every sweep point for every seed. Rows come out
/// ordered by sweep point, then seed, then strategy, in configuration order.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.check()?;
    let points = config.sweep_points()?;
    let per_seed: Vec<Vec<Cell>> = config
        .seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| run_seed(config, &points, i, seed))
        .collect::<Result<_>>()?;
    let mut cells: Vec<Cell> = per_seed.into_iter().flatten().collect();
    cells.sort_by_key(|c| c.key);
    let (rows, runs) = cells.into_iter().map(|c| (c.row, c.artifact)).unzip();
    Ok(SweepOutput { rows, runs })
}

/// Creates the output directory and writes the configuration snapshot, so
/// an unusable directory fails before any computation.
pub fn prepare_output_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = config.output_dir.clone();
    let runs = dir.join("runs");
    std::fs::create_dir_all(&runs).map_err(CliError::io(&runs))?;
    let snapshot = dir.join("config.toml");
    std::fs::write(&snapshot, config.to_toml()).map_err(CliError::io(&snapshot))?;
    Ok(dir)
}

pub fn write_outputs(dir: &Path, output: &SweepOutput) -> Result<()> {
    write_sweep_csv(&dir.join("sweep.csv"), &output.rows)?;

    let timings = dir.join("timings.csv");
    let mut text = String::from("strategy,sweep_value,seed,runtime_ms\n");
    for r in &output.rows {
        text.push_str(&format!(
            "{},{},{},{:.3}\n",
            r.strategy, r.sweep_value, r.seed, r.runtime_ms
        ));
    }
    std::fs::write(&timings, text).map_err(CliError::io(&timings))?;

    for run in &output.runs {
        let path = dir.join("runs").join(run.file_name());
        let mut json = serde_json::to_string_pretty(run).map_err(|e| CliError::Artifact {
            path: path.clone(),
            message: e.to_string(),
        })?;
        json.push('\n');
        std::fs::write(&path, json).map_err(CliError::io(&path))?;
    }
    Ok(())
}

/// Prepares the output directory, runs the sweep and writes every artifact.
pub fn execute(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.check()?;
    let dir = prepare_output_dir(config)?;
    let output = run_sweep(config)?;
    write_outputs(&dir, &output)?;
    Ok(output)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let artifact = |e: csv::Error| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(artifact)?;
    for r in rows {
        w.serialize(r).map_err(artifact)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let artifact = |e: csv::Error| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(artifact)?;
    r.deserialize()
        .collect::<Result<Vec<SweepRow>, _>>()
        .map_err(artifact)
}

pub fn read_run(path: &Path) -> Result<RunArtifact> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Strategy result compared with the exhaustive optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub strategy: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub entropy: f64,
    pub optimum: f64,
    pub ratio: f64,
}

/// Solves every (sweep point, seed) exhaustively and scores each configured
/// strategy against the optimum.
pub fn oracle_comparison(config: &ExperimentConfig) -> Result<Vec<OracleRow>> {
    config.check()?;
    let total: usize = config.chunk_counts().iter().sum();
    if total > precache_core::optimizer::EXHAUSTIVE_LIMIT {
        return Err(CliError::Validation(vec![format!(
            "catalog: {total} chunks is too many for exhaustive search (limit {})",
            precache_core::optimizer::EXHAUSTIVE_LIMIT
        )]));
    }
    let grid = config.chunk_grid()?;
    let points = config.sweep_points()?;
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let instance = config.instance(seed)?;
        for point in &points {
            let plan = budget(&point.chain, &grid, &instance.catalog)?;
            let problem = Problem::new(&instance.catalog, &instance.series, plan.cache_budget)?;
            let optimum = brute_force(&problem)?.report.total_entropy;
            for spec in &config.strategies {
                let entropy = run_strategy(spec, &problem, &instance)?.report.total_entropy;
                let ratio = if optimum > 0.0 { entropy / optimum } else { 1.0 };
                rows.push(OracleRow {
                    strategy: spec.name().to_string(),
                    sweep_value: point.value,
                    seed,
                    entropy,
                    optimum,
                    ratio,
                });
            }
        }
    }
    Ok(rows)
}
