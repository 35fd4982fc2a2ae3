use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use viewplan::coordination::{plan, validate, CheckStatus, PlanConfig, PlanResult, PlannerKind};
use viewplan::harness::{run_experiment, ExperimentConfig, ScenarioSource};
use viewplan::solvers::SolverKind;
use viewplan::world::Scenario;

#[derive(Parser)]
#[command(name = "viewplan", version, about = "Coordinated multi-camera view planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated scenario to a file.
    Generate {
        /// corridor, bottleneck or clutter
        generator: String,
        /// JSON file overriding the generator's parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one planner with one solver.
    Plan {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long, default_value = "cocap")]
        planner: PlannerKind,
        #[arg(long, default_value = "view-search")]
        solver: SolverKind,
        #[arg(long, default_value_t = 10_000)]
        node_budget: usize,
        /// Replan constraint-tree children on one thread.
        #[arg(long)]
        timing_strict: bool,
        /// Where to write the plan JSON; printed to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every planner/solver pair and write metrics and traces.
    Bench {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long = "planner", value_delimiter = ',', default_values_t = PlannerKind::ALL)]
        planners: Vec<PlannerKind>,
        #[arg(long = "solver", value_delimiter = ',', default_values_t = [SolverKind::ViewSearch])]
        solvers: Vec<SolverKind>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long, default_value_t = 10_000)]
        node_budget: usize,
        /// Run cells one at a time, each single-threaded.
        #[arg(long)]
        timing_strict: bool,
        /// Record zero compute time so reruns are byte-identical.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a saved plan against its scenario.
    Validate {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long)]
        plan: PathBuf,
    },
}

#[derive(Args)]
struct WorldArgs {
    /// Scenario file, or a generator name (corridor, bottleneck, clutter).
    #[arg(long)]
    scenario: String,
    /// Seed for generated scenarios.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the scenario's discount factor.
    #[arg(long)]
    gamma: Option<f64>,
}

impl WorldArgs {
    fn load(&self) -> anyhow::Result<Scenario> {
        let s = ScenarioSource::parse(&self.scenario)
            .build(self.seed)
            .with_context(|| format!("loading scenario '{}'", self.scenario))?;
        Ok(match self.gamma {
            Some(g) => s.with_discount(g)?,
            None => s,
        })
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate {
            generator,
            params,
            seed,
            out,
        } => {
            let mut source = ScenarioSource::named(&generator)?;
            if let Some(path) = params {
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                source = match source {
                    ScenarioSource::Corridor(_) => ScenarioSource::Corridor(serde_json::from_str(&text)?),
                    ScenarioSource::Bottleneck(_) => ScenarioSource::Bottleneck(serde_json::from_str(&text)?),
                    ScenarioSource::Clutter(_) => ScenarioSource::Clutter(serde_json::from_str(&text)?),
                    ScenarioSource::File { .. } => unreachable!("named() only returns generators"),
                };
            }
            source.build(seed)?.save(&out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan {
            world,
            planner,
            solver,
            node_budget,
            timing_strict,
            out,
        } => {
            let scenario = world.load()?;
            let cfg = PlanConfig {
                node_budget,
                parallel: !timing_strict,
                ..PlanConfig::new(solver)
            };
            let started = std::time::Instant::now();
            let result = plan(planner, &scenario, &cfg)
                .unwrap_or_else(|e| PlanResult::failed(planner, solver, &e, started.elapsed().as_secs_f64() * 1e3));
            match &out {
                Some(path) => {
                    result.save(path)?;
                    eprintln!(
                        "{planner}/{solver}: g = {:.6}, {:.1} ms -> {}",
                        result.total_reward,
                        result.compute_ms,
                        path.display()
                    );
                }
                None => print!("{}", result.to_json()?),
            }
            if let Some(f) = &result.failure {
                eprintln!("planner failed: {f}");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            world,
            planners,
            solvers,
            repetitions,
            node_budget,
            timing_strict,
            deterministic,
            out,
        } => {
            let cfg = ExperimentConfig {
                planners,
                solvers,
                repetitions,
                seed: world.seed,
                gamma: world.gamma,
                node_budget,
                timing_strict,
                deterministic,
                ..ExperimentConfig::new(ScenarioSource::parse(&world.scenario), out)
            };
            let output = run_experiment(&cfg)?;
            for r in &output.records {
                match &r.failure {
                    None => println!(
                        "{:<14} {:<16} seed {:<4} g = {:>12.6}  {:>10.1} ms  nodes {}/{}",
                        r.planner.name(),
                        r.solver.name(),
                        r.seed,
                        r.total_reward,
                        r.compute_ms,
                        r.nodes_expanded,
                        r.nodes_generated
                    ),
                    Some(f) => println!(
                        "{:<14} {:<16} seed {:<4} FAILED: {f}",
                        r.planner.name(),
                        r.solver.name(),
                        r.seed
                    ),
                }
            }
            println!("metrics: {}", output.metrics_csv.display());
            if output.failures() > 0 {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { world, plan } => {
            let scenario = world.load()?;
            let result = PlanResult::load(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let report = validate(&result, &scenario);
            for c in &report.checks {
                let mark = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::Skipped => "skip",
                };
                println!("{mark}  {:<15} {}", c.name, c.detail);
            }
            if !report.passed() {
                bail!("{} check(s) failed", report.failures().count());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
