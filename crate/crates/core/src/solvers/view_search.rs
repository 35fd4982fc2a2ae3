//! Best-first view search.
//!
//! Nodes are ordered by cumulative discounted reward plus an optimistic bound
//! on what the remaining timesteps can still add. The bound for a state at
//! time `k` sums, for every later time `t'`, the reward model's upper bound
//! over cells reachable by `t'`. Because that bound is consistent, the first
//! time a state is popped its cumulative reward is final, so each state is
//! expanded at most once and the first horizon state popped ends the search
//! with an optimal trajectory.
//!
//! Successors are queued before their reward is known, ranked by the bound on
//! their own cell. A successor's reward is computed when it first reaches the
//! front of the queue; it is then re-queued at its exact priority unless it
//! still leads. States the search never gets close to are never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::world::{Cell, GridVertex};

use super::{RewardModel, SingleAgentProblem, SolveOutput, SolveStats};

struct Node {
    vertex: GridVertex,
    /// Cumulative discounted reward; the parent's until `evaluated`.
    reward: f64,
    parent: Option<usize>,
    evaluated: bool,
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    priority: f64,
    t: usize,
    cell: Cell,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // max-heap: higher priority, then deeper, then smaller (y, x), then older
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(self.t.cmp(&other.t))
            .then(other.cell.cmp(&self.cell))
            .then(other.node.cmp(&self.node))
    }
}

pub fn solve_view_search<R: RewardModel>(p: &SingleAgentProblem, model: &mut R) -> Result<SolveOutput> {
    let (w, h, horizon) = (p.heightmap.width(), p.heightmap.height(), p.horizon);
    let slot = |v: GridVertex| (v.t * h + v.y) * w + v.x;
    let states = w * h * (horizon + 1);
    p.heightmap.check(p.start)?;
    let free = p.free_cells();
    let offsets = p.offsets();
    let allowed = |c: Cell, t: usize| free[c.y * w + c.x] && p.constraints.allows_vertex(c, t);
    let infeasible = || Error::Infeasible {
        robot: p.robot,
        start: p.start,
    };
    if !allowed(p.start, 0) {
        return Err(infeasible());
    }

    let mut heuristic = Heuristic {
        problem: p,
        memo: vec![f64::NAN; states],
        cells: vec![f64::NAN; states],
    };

    let mut nodes = vec![Node {
        vertex: p.start.at(0),
        reward: 0.0,
        parent: None,
        evaluated: true,
    }];
    // best evaluated cumulative reward per state, with its node
    let mut best = vec![(f64::NEG_INFINITY, usize::MAX); states];
    best[slot(p.start.at(0))] = (0.0, 0);
    let mut processed = vec![false; states];
    let mut expanded = Vec::new();
    let mut queue = BinaryHeap::new();
    queue.push(QueueEntry {
        priority: heuristic.get(model, p.start, 0)?,
        t: 0,
        cell: p.start,
        node: 0,
    });

    while let Some(mut entry) = queue.pop() {
        let vertex = nodes[entry.node].vertex;
        let k = slot(vertex);
        if processed[k] {
            continue;
        }
        if !nodes[entry.node].evaluated {
            // the successor's reward is only computed once it reaches the
            // front of the queue; until then it is ranked by an upper bound
            let parent = nodes[entry.node].parent.expect("pending nodes have a parent");
            let from = nodes[parent].vertex.cell();
            let r = nodes[entry.node].reward + p.weight(vertex.t) * p.edge_reward(model, from, vertex)?;
            if best[k].1 != usize::MAX && r <= best[k].0 {
                continue;
            }
            let node = &mut nodes[entry.node];
            node.reward = r;
            node.evaluated = true;
            best[k] = (r, entry.node);
            entry.priority = r + heuristic.get(model, vertex.cell(), vertex.t)?;
            if queue.peek().is_some_and(|head| *head > entry) {
                queue.push(entry);
                continue;
            }
        }
        if best[k].1 != entry.node {
            continue;
        }
        if vertex.t == horizon {
            let trajectory = backtrack(&nodes, entry.node);
            let discounted_reward = p.discounted_value(model, &trajectory)?;
            return Ok(SolveOutput {
                trajectory,
                discounted_reward,
                stats: SolveStats {
                    reward_evaluations: 0,
                    expansions: expanded.len(),
                },
                expanded,
            });
        }
        processed[k] = true;
        expanded.push(vertex);

        let reward = nodes[entry.node].reward;
        let from = vertex.cell();
        let t_next = vertex.t + 1;
        let weight = p.weight(t_next);
        for &off in &offsets {
            let Some(n) = p.shift(from, off) else { continue };
            if !allowed(n, t_next) || !p.constraints.allows_edge(from, n, vertex.t) {
                continue;
            }
            let succ = n.at(t_next);
            let ks = slot(succ);
            if processed[ks] {
                continue;
            }
            let optimistic = reward + weight * heuristic.cell_bound(model, n, t_next)?;
            if best[ks].1 != usize::MAX && optimistic <= best[ks].0 {
                continue;
            }
            let id = nodes.len();
            nodes.push(Node {
                vertex: succ,
                reward,
                parent: Some(entry.node),
                evaluated: false,
            });
            queue.push(QueueEntry {
                priority: optimistic + heuristic.get(model, n, t_next)?,
                t: t_next,
                cell: n,
                node: id,
            });
        }
    }
    Err(infeasible())
}

fn backtrack(nodes: &[Node], mut id: usize) -> Vec<GridVertex> {
    let mut path = vec![nodes[id].vertex];
    while let Some(parent) = nodes[id].parent {
        path.push(nodes[parent].vertex);
        id = parent;
    }
    path.reverse();
    path
}

struct Heuristic<'p, 'a> {
    problem: &'p SingleAgentProblem<'a>,
    /// Dense `(t, y, x)` tables, NaN until computed.
    memo: Vec<f64>,
    cells: Vec<f64>,
}

impl Heuristic<'_, '_> {
    /// Upper bound on the reward of entering `cell` at `t`.
    fn cell_bound<R: RewardModel>(&mut self, model: &mut R, cell: Cell, t: usize) -> Result<f64> {
        let p = self.problem;
        let slot = (t * p.heightmap.height() + cell.y) * p.heightmap.width() + cell.x;
        if self.cells[slot].is_nan() {
            self.cells[slot] = model.reward_bound(cell, 0, t)?;
        }
        Ok(self.cells[slot])
    }

    /// Optimistic discounted reward still collectable from `cell` at time `t`.
    fn get<R: RewardModel>(&mut self, model: &mut R, cell: Cell, t: usize) -> Result<f64> {
        let p = self.problem;
        let slot = (t * p.heightmap.height() + cell.y) * p.heightmap.width() + cell.x;
        if !self.memo[slot].is_nan() {
            return Ok(self.memo[slot]);
        }
        let mut h = 0.0;
        for later in t + 1..=p.horizon {
            let radius = p.motion.max_step * (later - t);
            h += p.weight(later) * model.reward_bound(cell, radius, later)?;
        }
        self.memo[slot] = h;
        Ok(h)
    }
}
