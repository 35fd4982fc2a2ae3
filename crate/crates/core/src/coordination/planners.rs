use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::coverage::{commit, CoverageLedger};
use crate::error::{Error, Result};
use crate::solvers::{solve_for_robot, Constraint, ConstraintSet, SolverConfig, SolverKind};
use crate::world::{GridVertex, Scenario};

use super::conflict::{detect_first_conflict, split};
use super::{PlanResult, PlannerKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    pub solver: SolverKind,
    pub solver_cfg: SolverConfig,
    /// Constraint-tree expansions allowed before giving up.
    pub node_budget: usize,
    /// Replan the two children of a split on separate threads.
    pub parallel: bool,
}

impl PlanConfig {
    pub fn new(solver: SolverKind) -> Self {
        PlanConfig {
            solver,
            solver_cfg: SolverConfig::default(),
            node_budget: 10_000,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Effort {
    nodes_generated: usize,
    nodes_expanded: usize,
    conflicts_resolved: usize,
    solver_expansions: usize,
    reward_evaluations: usize,
}

struct Outcome {
    paths: Vec<Vec<GridVertex>>,
    constraints: Vec<Constraint>,
    effort: Effort,
}

pub fn plan(kind: PlannerKind, scenario: &Scenario, cfg: &PlanConfig) -> Result<PlanResult> {
    let started = Instant::now();
    let outcome = match kind {
        PlannerKind::Unconstrained => unconstrained(scenario, cfg),
        PlannerKind::Sequential => sequential(scenario, cfg),
        PlannerKind::CoCap => cocap(scenario, cfg),
    }?;
    let compute_ms = started.elapsed().as_secs_f64() * 1e3;
    let e = outcome.effort;
    let mut result = PlanResult::from_paths(kind, cfg.solver, &outcome.paths, scenario)?;
    result.constraints = outcome.constraints;
    result.nodes_generated = e.nodes_generated;
    result.nodes_expanded = e.nodes_expanded;
    result.conflicts_resolved = e.conflicts_resolved;
    result.solver_expansions = e.solver_expansions;
    result.reward_evaluations = e.reward_evaluations;
    result.compute_ms = compute_ms;
    Ok(result)
}

/// Robots in index order, each against the coverage of the ones before it.
pub fn plan_unconstrained(scenario: &Scenario, cfg: &PlanConfig) -> Result<PlanResult> {
    plan(PlannerKind::Unconstrained, scenario, cfg)
}

/// Prioritized planning: robot `i` must avoid every robot `< i`.
pub fn plan_sequential(scenario: &Scenario, cfg: &PlanConfig) -> Result<PlanResult> {
    plan(PlannerKind::Sequential, scenario, cfg)
}

/// Constraint-tree search seeded with the unconstrained greedy plan.
pub fn plan_cocap(scenario: &Scenario, cfg: &PlanConfig) -> Result<PlanResult> {
    plan(PlannerKind::CoCap, scenario, cfg)
}

struct Greedy {
    paths: Vec<Vec<GridVertex>>,
    ledger: CoverageLedger,
    constraints: Vec<Constraint>,
    effort: Effort,
}

fn greedy(
    scenario: &Scenario,
    cfg: &PlanConfig,
    mut constraints_for: impl FnMut(usize, &[Vec<GridVertex>]) -> Vec<Constraint>,
) -> Result<Greedy> {
    let mut ledger = CoverageLedger::new();
    let mut paths: Vec<Vec<GridVertex>> = Vec::with_capacity(scenario.robots.len());
    let mut all = Vec::new();
    let mut effort = Effort::default();
    for i in 0..scenario.robots.len() {
        let own = constraints_for(i, &paths);
        let set = ConstraintSet::for_robot(i, &own);
        let out = solve_for_robot(cfg.solver, i, &set, &ledger, scenario, &cfg.solver_cfg)?;
        effort.solver_expansions += out.stats.expansions;
        effort.reward_evaluations += out.stats.reward_evaluations;
        for &v in &out.trajectory {
            commit(&mut ledger, i, v, scenario)?;
        }
        paths.push(out.trajectory);
        all.extend(own);
    }
    effort.nodes_generated = 1;
    effort.nodes_expanded = 1;
    Ok(Greedy {
        paths,
        ledger,
        constraints: all,
        effort,
    })
}

fn unconstrained(scenario: &Scenario, cfg: &PlanConfig) -> Result<Outcome> {
    let g = greedy(scenario, cfg, |_, _| Vec::new())?;
    Ok(Outcome {
        paths: g.paths,
        constraints: g.constraints,
        effort: g.effort,
    })
}

/// Constraints keeping robot `i` off every committed path.
pub fn avoidance_constraints(i: usize, committed: &[Vec<GridVertex>]) -> Vec<Constraint> {
    let mut out = Vec::new();
    for p in committed {
        for (t, v) in p.iter().enumerate() {
            out.push(Constraint::vertex(i, v.cell(), t));
            if let Some(next) = p.get(t + 1) {
                if next.cell() != v.cell() {
                    out.push(Constraint::edge(i, next.cell(), v.cell(), t));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn sequential(scenario: &Scenario, cfg: &PlanConfig) -> Result<Outcome> {
    let g = greedy(scenario, cfg, avoidance_constraints).map_err(|e| match e {
        Error::Infeasible { robot, .. } => Error::SequentialFailure { robot },
        other => other,
    })?;
    Ok(Outcome {
        paths: g.paths,
        constraints: g.constraints,
        effort: g.effort,
    })
}

struct TreeNode {
    paths: Vec<Vec<GridVertex>>,
    constraints: Vec<Constraint>,
    ledger: CoverageLedger,
    g: f64,
    id: usize,
}

impl TreeNode {
    fn consistent(&self) -> bool {
        self.constraints.iter().all(|c| !c.violated_by(&self.paths[c.robot]))
    }
}

impl PartialEq for TreeNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TreeNode {}

impl PartialOrd for TreeNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TreeNode {
    // max-heap: higher g, then fewer constraints, then inserted earlier
    fn cmp(&self, other: &Self) -> Ordering {
        self.g
            .total_cmp(&other.g)
            .then(other.constraints.len().cmp(&self.constraints.len()))
            .then(other.id.cmp(&self.id))
    }
}

struct Child {
    paths: Vec<Vec<GridVertex>>,
    constraints: Vec<Constraint>,
    ledger: CoverageLedger,
    g: f64,
    expansions: usize,
    evaluations: usize,
}

/// Adds `omega` to the parent's constraints and replans its robot against
/// everyone else's coverage. `None` when the robot has no feasible path.
fn replan(parent: &TreeNode, omega: Constraint, scenario: &Scenario, cfg: &PlanConfig) -> Result<Option<Child>> {
    let robot = omega.robot;
    let mut constraints = parent.constraints.clone();
    constraints.push(omega);
    let mut ledger = parent.ledger.clone();
    ledger.remove_robot(robot);
    let set = ConstraintSet::for_robot(robot, &constraints);
    let out = match solve_for_robot(cfg.solver, robot, &set, &ledger, scenario, &cfg.solver_cfg) {
        Ok(out) => out,
        Err(Error::Infeasible { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    for &v in &out.trajectory {
        commit(&mut ledger, robot, v, scenario)?;
    }
    let mut paths = parent.paths.clone();
    paths[robot] = out.trajectory;
    Ok(Some(Child {
        paths,
        constraints,
        g: ledger.value(),
        ledger,
        expansions: out.stats.expansions,
        evaluations: out.stats.reward_evaluations,
    }))
}

fn cocap(scenario: &Scenario, cfg: &PlanConfig) -> Result<Outcome> {
    let Greedy {
        paths,
        ledger,
        effort: root_effort,
        ..
    } = greedy(scenario, cfg, |_, _| Vec::new())?;
    let mut effort = Effort {
        nodes_generated: 1,
        nodes_expanded: 0,
        conflicts_resolved: 0,
        ..root_effort
    };
    let mut tree = BinaryHeap::new();
    let mut next_id = 0;
    tree.push(TreeNode {
        g: ledger.value(),
        paths,
        constraints: Vec::new(),
        ledger,
        id: next_id,
    });
    next_id += 1;
    let mut best_g = f64::NEG_INFINITY;

    while let Some(node) = tree.pop() {
        effort.nodes_expanded += 1;
        best_g = best_g.max(node.g);
        let Some(conflict) = detect_first_conflict(&node.paths)? else {
            return Ok(Outcome {
                paths: node.paths,
                constraints: node.constraints,
                effort,
            });
        };
        if effort.nodes_expanded >= cfg.node_budget {
            break;
        }
        effort.conflicts_resolved += 1;
        let (wi, wj) = split(&conflict);
        let (left, right) = if cfg.parallel {
            rayon::join(|| replan(&node, wi, scenario, cfg), || replan(&node, wj, scenario, cfg))
        } else {
            (replan(&node, wi, scenario, cfg), replan(&node, wj, scenario, cfg))
        };
        for child in [left?, right?].into_iter().flatten() {
            effort.solver_expansions += child.expansions;
            effort.reward_evaluations += child.evaluations;
            let child = TreeNode {
                paths: child.paths,
                constraints: child.constraints,
                ledger: child.ledger,
                g: child.g,
                id: next_id,
            };
            debug_assert!(child.consistent(), "child violates its own constraints");
            debug_assert_eq!(child.constraints.len(), node.constraints.len() + 1);
            next_id += 1;
            effort.nodes_generated += 1;
            tree.push(child);
        }
    }
    Err(Error::NoSolution {
        nodes_expanded: effort.nodes_expanded,
        best_g: if best_g.is_finite() { best_g } else { 0.0 },
    })
}
