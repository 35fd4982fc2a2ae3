//! Multi-robot planners on top of the single-robot solvers.
//!
//! All three planners share the same greedy pass: robots are planned in index
//! order, each against the ledger of the robots before it, and each commits
//! the coverage its chosen path really collects. `sequential` additionally
//! keeps every robot off the paths already committed; `cocap` starts from the
//! unconstrained greedy plan and resolves conflicts in a constraint tree.

mod conflict;
mod planners;
mod validate;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::stream_joint;
use crate::error::{Error, Result};
use crate::solvers::{Constraint, SolverKind};
use crate::world::{Cell, GridVertex, Scenario};

pub use conflict::{count_conflicts, detect_first_conflict, split, Conflict, ConflictKind};
pub use planners::{avoidance_constraints, plan, plan_cocap, plan_sequential, plan_unconstrained, PlanConfig};
pub use validate::{validate, Check, CheckStatus, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Unconstrained,
    Sequential,
    CoCap,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Unconstrained, PlannerKind::Sequential, PlannerKind::CoCap];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Unconstrained => "unconstrained",
            PlannerKind::Sequential => "sequential",
            PlannerKind::CoCap => "cocap",
        }
    }

    /// Whether the planner promises a conflict-free joint path.
    pub fn avoids_collisions(self) -> bool {
        !matches!(self, PlannerKind::Unconstrained)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconstrained" => Ok(PlannerKind::Unconstrained),
            "sequential" | "prioritized" => Ok(PlannerKind::Sequential),
            "cocap" => Ok(PlannerKind::CoCap),
            other => Err(Error::Invalid(format!("unknown planner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanStatus {
    Success,
    Failure,
}

/// A joint plan plus the bookkeeping reported for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanResult {
    pub planner: PlannerKind,
    pub solver: SolverKind,
    pub status: PlanStatus,
    /// One cell per timestep `0..=T` for every robot.
    pub trajectories: Vec<Vec<Cell>>,
    /// Joint coverage gained at each timestep `0..=T`, committed time-major.
    pub marginals: Vec<f64>,
    pub total_reward: f64,
    pub nodes_generated: usize,
    pub nodes_expanded: usize,
    pub conflicts_resolved: usize,
    /// States expanded or backed up by the single-robot solver, summed.
    pub solver_expansions: usize,
    /// Distinct `(x, y, t)` rewards computed by the solver, summed.
    pub reward_evaluations: usize,
    pub compute_ms: f64,
    pub constraints: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl PlanResult {
    /// A successful result scored from scratch; counters left at zero.
    pub fn from_paths(
        planner: PlannerKind,
        solver: SolverKind,
        paths: &[Vec<GridVertex>],
        scenario: &Scenario,
    ) -> Result<Self> {
        let (ledger, marginals) = stream_joint(paths, scenario)?;
        Ok(PlanResult {
            planner,
            solver,
            status: PlanStatus::Success,
            trajectories: paths.iter().map(|p| p.iter().map(|v| v.cell()).collect()).collect(),
            marginals,
            total_reward: ledger.value(),
            nodes_generated: 0,
            nodes_expanded: 0,
            conflicts_resolved: 0,
            solver_expansions: 0,
            reward_evaluations: 0,
            compute_ms: 0.0,
            constraints: Vec::new(),
            failure: None,
        })
    }

    pub fn failed(planner: PlannerKind, solver: SolverKind, error: &Error, compute_ms: f64) -> Self {
        let nodes_expanded = match error {
            Error::NoSolution { nodes_expanded, .. } => *nodes_expanded,
            _ => 0,
        };
        PlanResult {
            planner,
            solver,
            status: PlanStatus::Failure,
            trajectories: Vec::new(),
            marginals: Vec::new(),
            total_reward: 0.0,
            nodes_generated: 0,
            nodes_expanded,
            conflicts_resolved: 0,
            solver_expansions: 0,
            reward_evaluations: 0,
            compute_ms,
            constraints: Vec::new(),
            failure: Some(error.to_string()),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == PlanStatus::Success
    }

    /// Trajectories as motion-graph vertices.
    pub fn paths(&self) -> Vec<Vec<GridVertex>> {
        self.trajectories
            .iter()
            .map(|p| p.iter().enumerate().map(|(t, c)| c.at(t)).collect())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
