//! Runs planner/solver matrices and writes plans, metrics and reward traces.
//!
//! Layout of the output directory:
//!
//! ```text
//! scenario_seed<S>.json             the scenario each repetition ran on
//! plans/<planner>_<solver>_seed<S>.json
//! metrics.csv                       one row per cell
//! trace_<solver>_seed<S>.csv        scaled per-timestep joint reward
//! summary.csv                       mean/min/max per (planner, solver)
//! ```
//!
//! Trace values are the time-major joint marginals divided by the
//! unconstrained total of the same solver and seed, or left unscaled when that
//! baseline is missing from the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coordination::{plan, validate, PlanConfig, PlanResult, PlanStatus, PlannerKind};
use crate::error::{Error, Result};
use crate::solvers::SolverKind;
use crate::world::Scenario;

use super::generators::{
    generate_bottleneck, generate_clutter, generate_corridor, BottleneckParams, ClutterParams, CorridorParams,
};

pub const METRICS_HEADER: [&str; 9] = [
    "planner",
    "solver",
    "total_reward",
    "compute_ms",
    "nodes_generated",
    "nodes_expanded",
    "conflicts_resolved",
    "seed",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum ScenarioSource {
    /// A scenario file; every repetition runs on the same world.
    File {
        path: PathBuf,
    },
    Corridor(CorridorParams),
    Bottleneck(BottleneckParams),
    Clutter(ClutterParams),
}

impl ScenarioSource {
    /// Generator by name with default parameters.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "corridor" => Ok(ScenarioSource::Corridor(CorridorParams::default())),
            "bottleneck" => Ok(ScenarioSource::Bottleneck(BottleneckParams::default())),
            "clutter" => Ok(ScenarioSource::Clutter(ClutterParams::default())),
            other => Err(Error::Invalid(format!("unknown generator '{other}'"))),
        }
    }

    /// A generator name or, failing that, a path to a scenario file.
    pub fn parse(spec: &str) -> Self {
        Self::named(spec).unwrap_or_else(|_| ScenarioSource::File { path: spec.into() })
    }

    pub fn build(&self, seed: u64) -> Result<Scenario> {
        match self {
            ScenarioSource::File { path } => Scenario::load(path),
            ScenarioSource::Corridor(p) => generate_corridor(&CorridorParams { seed, ..p.clone() }),
            ScenarioSource::Bottleneck(p) => generate_bottleneck(&BottleneckParams { seed, ..p.clone() }),
            ScenarioSource::Clutter(p) => generate_clutter(&ClutterParams { seed, ..p.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSource,
    pub planners: Vec<PlannerKind>,
    pub solvers: Vec<SolverKind>,
    pub out_dir: PathBuf,
    /// Repetition `r` runs with seed `seed + r`.
    pub repetitions: usize,
    pub seed: u64,
    /// Overrides the scenario's discount factor.
    pub gamma: Option<f64>,
    pub node_budget: usize,
    /// Run cells one at a time, each single-threaded.
    pub timing_strict: bool,
    /// Write 0 for every compute time so reruns are byte-identical.
    pub deterministic: bool,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioSource, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            scenario,
            planners: PlannerKind::ALL.to_vec(),
            solvers: vec![SolverKind::ViewSearch],
            out_dir: out_dir.into(),
            repetitions: 1,
            seed: 0,
            gamma: None,
            node_budget: PlanConfig::new(SolverKind::ViewSearch).node_budget,
            timing_strict: false,
            deterministic: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.planners.is_empty() || self.solvers.is_empty() {
            return Err(Error::Invalid("need at least one planner and one solver".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Invalid("repetitions must be >= 1".into()));
        }
        if self.node_budget == 0 {
            return Err(Error::Invalid("node budget must be >= 1".into()));
        }
        Ok(())
    }

    fn plan_config(&self, solver: SolverKind) -> PlanConfig {
        PlanConfig {
            node_budget: self.node_budget,
            parallel: !self.timing_strict,
            ..PlanConfig::new(solver)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub planner: PlannerKind,
    pub solver: SolverKind,
    pub seed: u64,
    pub status: PlanStatus,
    pub total_reward: f64,
    /// Joint marginal per timestep `0..=T`, divided by `scale`.
    pub scaled_rewards: Vec<f64>,
    pub scale: f64,
    pub compute_ms: f64,
    pub nodes_generated: usize,
    pub nodes_expanded: usize,
    pub conflicts_resolved: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Serialize)]
struct MetricsRow<'a> {
    planner: &'a str,
    solver: &'a str,
    total_reward: Option<f64>,
    compute_ms: f64,
    nodes_generated: usize,
    nodes_expanded: usize,
    conflicts_resolved: usize,
    seed: u64,
    status: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<MetricsRecord>,
    pub metrics_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub trace_csvs: Vec<PathBuf>,
    pub plan_files: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.status == PlanStatus::Failure).count()
    }
}

struct Cell {
    seed: u64,
    planner: PlannerKind,
    solver: SolverKind,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.check()?;
    let plans_dir = cfg.out_dir.join("plans");
    fs::create_dir_all(&plans_dir)?;

    let mut scenarios = BTreeMap::new();
    for r in 0..cfg.repetitions {
        let seed = cfg.seed + r as u64;
        let mut s = cfg.scenario.build(seed)?;
        if let Some(g) = cfg.gamma {
            s = s.with_discount(g)?;
        }
        s.save(cfg.out_dir.join(format!("scenario_seed{seed}.json")))?;
        scenarios.insert(seed, s);
    }

    let cells: Vec<Cell> = scenarios
        .keys()
        .flat_map(|&seed| {
            cfg.solvers
                .iter()
                .flat_map(move |&solver| cfg.planners.iter().map(move |&planner| Cell { seed, planner, solver }))
        })
        .collect();
    let run = |c: &Cell| run_cell(c, &scenarios[&c.seed], cfg);
    let mut results: Vec<PlanResult> = if cfg.timing_strict {
        cells.iter().map(run).collect()
    } else {
        cells.par_iter().map(run).collect()
    };
    if cfg.deterministic {
        for r in &mut results {
            r.compute_ms = 0.0;
        }
    }

    let mut plan_files = Vec::new();
    for (c, r) in cells.iter().zip(&results) {
        let path = plans_dir.join(format!("{}_{}_seed{}.json", c.planner, c.solver, c.seed));
        r.save(&path)?;
        plan_files.push(path);
    }

    let records = records(&cells, &results);
    let metrics_csv = cfg.out_dir.join("metrics.csv");
    write_metrics(&metrics_csv, &records)?;
    let trace_csvs = write_traces(&cfg.out_dir, cfg, &records, &scenarios)?;
    let summary_csv = cfg.out_dir.join("summary.csv");
    write_summary(&summary_csv, cfg, &records)?;
    Ok(ExperimentOutput {
        records,
        metrics_csv,
        summary_csv,
        trace_csvs,
        plan_files,
    })
}

fn run_cell(c: &Cell, scenario: &Scenario, cfg: &ExperimentConfig) -> PlanResult {
    let started = Instant::now();
    match plan(c.planner, scenario, &cfg.plan_config(c.solver)) {
        Ok(r) => {
            let report = validate(&r, scenario);
            if report.passed() {
                r
            } else {
                let detail: Vec<String> = report.failures().map(|f| format!("{}: {}", f.name, f.detail)).collect();
                let err = Error::Invalid(format!("plan failed validation ({})", detail.join("; ")));
                PlanResult::failed(c.planner, c.solver, &err, r.compute_ms)
            }
        }
        Err(e) => PlanResult::failed(c.planner, c.solver, &e, started.elapsed().as_secs_f64() * 1e3),
    }
}

fn records(cells: &[Cell], results: &[PlanResult]) -> Vec<MetricsRecord> {
    let baseline = |seed: u64, solver: SolverKind| {
        cells
            .iter()
            .zip(results)
            .find(|(c, r)| {
                c.seed == seed && c.solver == solver && c.planner == PlannerKind::Unconstrained && r.is_success()
            })
            .map(|(_, r)| r.total_reward)
            .filter(|g| *g > 0.0)
            .unwrap_or(1.0)
    };
    cells
        .iter()
        .zip(results)
        .map(|(c, r)| {
            let scale = baseline(c.seed, c.solver);
            MetricsRecord {
                planner: c.planner,
                solver: c.solver,
                seed: c.seed,
                status: r.status,
                total_reward: r.total_reward,
                scaled_rewards: r.marginals.iter().map(|m| m / scale).collect(),
                scale,
                compute_ms: r.compute_ms,
                nodes_generated: r.nodes_generated,
                nodes_expanded: r.nodes_expanded,
                conflicts_resolved: r.conflicts_resolved,
                failure: r.failure.clone(),
            }
        })
        .collect()
}

fn status_name(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::Success => "success",
        PlanStatus::Failure => "failure",
    }
}

fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        let ok = r.status == PlanStatus::Success;
        w.serialize(MetricsRow {
            planner: r.planner.name(),
            solver: r.solver.name(),
            total_reward: ok.then_some(r.total_reward),
            compute_ms: r.compute_ms,
            nodes_generated: r.nodes_generated,
            nodes_expanded: r.nodes_expanded,
            conflicts_resolved: r.conflicts_resolved,
            seed: r.seed,
            status: status_name(r.status),
        })?;
    }
    w.flush()?;
    Ok(())
}

fn write_traces(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[MetricsRecord],
    scenarios: &BTreeMap<u64, Scenario>,
) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (&seed, scenario) in scenarios {
        for &solver in &cfg.solvers {
            let cols: Vec<&MetricsRecord> = cfg
                .planners
                .iter()
                .filter_map(|&p| {
                    records
                        .iter()
                        .find(|r| r.seed == seed && r.solver == solver && r.planner == p)
                })
                .collect();
            let path = dir.join(format!("trace_{solver}_seed{seed}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            let mut header = vec!["t".to_string()];
            header.extend(cols.iter().map(|r| r.planner.name().to_string()));
            w.write_record(&header)?;
            for t in 0..=scenario.horizon {
                let mut row = vec![t.to_string()];
                // failed cells leave their column empty
                row.extend(
                    cols.iter()
                        .map(|r| r.scaled_rewards.get(t).map(f64::to_string).unwrap_or_default()),
                );
                w.write_record(&row)?;
            }
            w.flush()?;
            paths.push(path);
        }
    }
    Ok(paths)
}

fn write_summary(path: &Path, cfg: &ExperimentConfig, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "planner",
        "solver",
        "runs",
        "successes",
        "reward_mean",
        "reward_min",
        "reward_max",
        "compute_ms_mean",
        "compute_ms_min",
        "compute_ms_max",
    ])?;
    for &solver in &cfg.solvers {
        for &planner in &cfg.planners {
            let runs: Vec<&MetricsRecord> = records
                .iter()
                .filter(|r| r.planner == planner && r.solver == solver)
                .collect();
            let ok: Vec<&&MetricsRecord> = runs.iter().filter(|r| r.status == PlanStatus::Success).collect();
            let rewards: Vec<f64> = ok.iter().map(|r| r.total_reward).collect();
            let times: Vec<f64> = ok.iter().map(|r| r.compute_ms).collect();
            let mut row = vec![
                planner.name().to_string(),
                solver.name().to_string(),
                runs.len().to_string(),
                ok.len().to_string(),
            ];
            row.extend(stats(&rewards));
            row.extend(stats(&times));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// mean, min, max; empty strings when nothing succeeded.
fn stats(xs: &[f64]) -> [String; 3] {
    if xs.is_empty() {
        return Default::default();
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [mean.to_string(), min.to_string(), max.to_string()]
}
