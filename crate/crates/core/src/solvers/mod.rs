//! Single-robot trajectory optimizers.
//!
//! Both solvers maximize the discounted sum `sum_{t=1..T} gamma^t * r_t` over
//! trajectories on the `(x, y, t)` motion graph, where `r_t` is the step reward
//! of the vertex entered at time `t`. Rewards are Markovian: they depend on a
//! frozen coverage ledger, never on the robot's own earlier observations.

mod reward;
mod value_iteration;
mod view_search;


use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageLedger;
use crate::error::{Error, Result};
use crate::world::{Cell, GridVertex, HeightMap, MotionModel, Scenario};

pub use reward::{step_reward, CoverageReward, RewardModel};
pub use value_iteration::solve_value_iteration;
pub use view_search::solve_view_search;

/// Forbids robot `robot` from occupying `from` at `t` (vertex form) or from
/// moving `from@t -> to@t+1` (edge form).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub robot: usize,
    pub from: Cell,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Cell>,
    pub t: usize,
}

impl Constraint {
    pub fn vertex(robot: usize, cell: Cell, t: usize) -> Self {
        Constraint {
            robot,
            from: cell,
            to: None,
            t,
        }
    }

    pub fn edge(robot: usize, from: Cell, to: Cell, t: usize) -> Self {
        Constraint {
            robot,
            from,
            to: Some(to),
            t,
        }
    }

    /// True when `path` (indexed by time) breaks this constraint.
    pub fn violated_by(&self, path: &[GridVertex]) -> bool {
        match self.to {
            None => path.get(self.t).is_some_and(|v| v.cell() == self.from),
            Some(to) => match (path.get(self.t), path.get(self.t + 1)) {
                (Some(a), Some(b)) => a.cell() == self.from && b.cell() == to,
                _ => false,
            },
        }
    }
}

/// The constraints of one robot, indexed for O(1) lookups.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    vertex: HashSet<(Cell, usize)>,
    edge: HashSet<(Cell, Cell, usize)>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Collects the constraints that belong to `robot`.
    pub fn for_robot<'a>(robot: usize, all: impl IntoIterator<Item = &'a Constraint>) -> Self {
        let mut set = Self::new();
        for c in all.into_iter().filter(|c| c.robot == robot) {
            set.add(c);
        }
        set
    }

    pub fn add(&mut self, c: &Constraint) {
        match c.to {
            None => {
                self.vertex.insert((c.from, c.t));
            }
            Some(to) => {
                self.edge.insert((c.from, to, c.t));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.vertex.len() + self.edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn allows_vertex(&self, cell: Cell, t: usize) -> bool {
        !self.vertex.contains(&(cell, t))
    }

    /// `t` is the departure time.
    pub fn allows_edge(&self, from: Cell, to: Cell, t: usize) -> bool {
        !self.edge.contains(&(from, to, t))
    }

    pub fn satisfied_by(&self, path: &[GridVertex]) -> bool {
        path.iter().all(|v| self.allows_vertex(v.cell(), v.t))
            && path
                .windows(2)
                .all(|w| self.allows_edge(w[0].cell(), w[1].cell(), w[0].t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    ValueIteration,
    ViewSearch,
}

impl SolverKind {
    pub const ALL: [SolverKind; 2] = [SolverKind::ValueIteration, SolverKind::ViewSearch];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::ValueIteration => "value-iteration",
            SolverKind::ViewSearch => "view-search",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value-iteration" | "vi" | "mdp" => Ok(SolverKind::ValueIteration),
            "view-search" | "search" => Ok(SolverKind::ViewSearch),
            other => Err(Error::Invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Penalty per cell of motion (stable-camera term); 0 disables it.
    pub lambda_motion: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { lambda_motion: 0.0 }
    }
}

/// A single-robot planning problem on the motion graph.
#[derive(Debug, Clone, Copy)]
pub struct SingleAgentProblem<'a> {
    pub robot: usize,
    pub start: Cell,
    pub heightmap: &'a HeightMap,
    pub motion: &'a MotionModel,
    pub horizon: usize,
    pub gamma: f64,
    pub lambda_motion: f64,
    pub constraints: &'a ConstraintSet,
}

impl<'a> SingleAgentProblem<'a> {
    pub fn from_scenario(
        scenario: &'a Scenario,
        robot: usize,
        constraints: &'a ConstraintSet,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        let start = *scenario
            .robots
            .get(robot)
            .ok_or_else(|| Error::Invalid(format!("no robot {robot}")))?;
        Ok(SingleAgentProblem {
            robot,
            start,
            heightmap: &scenario.heightmap,
            motion: &scenario.motion,
            horizon: scenario.horizon,
            gamma: scenario.discount,
            lambda_motion: cfg.lambda_motion,
            constraints,
        })
    }

    pub(crate) fn weight(&self, t: usize) -> f64 {
        self.gamma.powi(t as i32)
    }

    pub(crate) fn free_cells(&self) -> Vec<bool> {
        let h = self.heightmap;
        let limit = self.motion.flight_altitude - self.motion.clearance;
        h.elevations().iter().map(|e| *e <= limit).collect()
    }

    /// Move offsets allowed by the motion model, in `(dy, dx)` row-major order.
    pub(crate) fn offsets(&self) -> Vec<(i64, i64)> {
        let r = self.motion.max_step as i64;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let ok = match self.motion.connectivity {
                    crate::world::Connectivity::Four => dx.abs() + dy.abs() <= r,
                    crate::world::Connectivity::Eight => true,
                };
                if ok {
                    out.push((dy, dx));
                }
            }
        }
        out
    }

    pub(crate) fn shift(&self, c: Cell, (dy, dx): (i64, i64)) -> Option<Cell> {
        let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
        self.heightmap.contains(x, y).then(|| Cell::new(x as usize, y as usize))
    }

    pub(crate) fn edge_reward<R: RewardModel>(&self, model: &mut R, from: Cell, to: GridVertex) -> Result<f64> {
        let base = model.state_reward(to)?;
        Ok((base - self.lambda_motion * from.step_length(to.cell())).max(0.0))
    }

    /// Forward discounted value of a full trajectory.
    pub fn discounted_value<R: RewardModel>(&self, model: &mut R, path: &[GridVertex]) -> Result<f64> {
        let mut total = 0.0;
        for w in path.windows(2) {
            total += self.weight(w[1].t) * self.edge_reward(model, w[0].cell(), w[1])?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Distinct `(x, y, t)` states whose reward was computed.
    pub reward_evaluations: usize,
    /// States expanded (view search) or backed up (value iteration).
    pub expansions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub trajectory: Vec<GridVertex>,
    pub discounted_reward: f64,
    pub stats: SolveStats,
    /// Expansion order; only recorded by the view search.
    pub expanded: Vec<GridVertex>,
}

pub fn solve<R: RewardModel>(kind: SolverKind, problem: &SingleAgentProblem, model: &mut R) -> Result<SolveOutput> {
    match kind {
        SolverKind::ValueIteration => solve_value_iteration(problem, model),
        SolverKind::ViewSearch => solve_view_search(problem, model),
    }
}

/// Solves for `robot` with `covm` against `frozen` as the step reward.
pub fn solve_for_robot(
    kind: SolverKind,
    robot: usize,
    constraints: &ConstraintSet,
    frozen: &CoverageLedger,
    scenario: &Scenario,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    let problem = SingleAgentProblem::from_scenario(scenario, robot, constraints, cfg)?;
    let mut model = CoverageReward::new(scenario, frozen)?;
    let mut out = solve(kind, &problem, &mut model)?;
    out.stats.reward_evaluations = model.evaluations();
    Ok(out)
}

/// Exact backward dynamic program over the whole `(x, y, t)` state space.
pub fn value_iteration(
    robot: usize,
    constraints: &ConstraintSet,
    frozen: &CoverageLedger,
    scenario: &Scenario,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    solve_for_robot(SolverKind::ValueIteration, robot, constraints, frozen, scenario, cfg)
}

/// Best-first view search with an optimistic coverage bound as heuristic.
pub fn view_search(
    robot: usize,
    constraints: &ConstraintSet,
    frozen: &CoverageLedger,
    scenario: &Scenario,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    solve_for_robot(SolverKind::ViewSearch, robot, constraints, frozen, scenario, cfg)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_violation_scan() {
        let path: Vec<_> = [(0, 0), (1, 0), (2, 1)]
            .iter()
            .enumerate()
            .map(|(t, &(x, y))| GridVertex::new(x, y, t))
            .collect();
        assert!(Constraint::vertex(0, Cell::new(1, 0), 1).violated_by(&path));
        assert!(!Constraint::vertex(0, Cell::new(1, 0), 2).violated_by(&path));
        assert!(Constraint::edge(0, Cell::new(1, 0), Cell::new(2, 1), 1).violated_by(&path));
        assert!(!Constraint::edge(0, Cell::new(2, 1), Cell::new(1, 0), 1).violated_by(&path));
        let set = ConstraintSet::for_robot(
            0,
            &[
                Constraint::vertex(0, Cell::new(1, 0), 2),
                Constraint::vertex(1, Cell::new(1, 0), 1),
            ],
        );
        assert_eq!(set.len(), 1);
        assert!(set.satisfied_by(&path));
    }

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("astar".parse::<SolverKind>().is_err());
    }
}
