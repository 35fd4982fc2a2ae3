use crate::error::{Error, Result};
use crate::world::Cell;

use super::{RewardModel, SingleAgentProblem, SolveOutput, SolveStats};

/// Backward induction over every `(x, y, t)` state:
/// `V_T = 0`, `V_t(s) = max_{s'} gamma^(t+1) r(s -> s') + V_{t+1}(s')`,
/// followed by a greedy rollout from the start. Ties go to the successor with
/// the smaller `(y, x)`.
pub fn solve_value_iteration<R: RewardModel>(p: &SingleAgentProblem, model: &mut R) -> Result<SolveOutput> {
    let (w, h, horizon) = (p.heightmap.width(), p.heightmap.height(), p.horizon);
    p.heightmap.check(p.start)?;
    let free = p.free_cells();
    let offsets = p.offsets();
    let idx = |c: Cell| c.y * w + c.x;
    let allowed = |c: Cell, t: usize| free[idx(c)] && p.constraints.allows_vertex(c, t);
    let infeasible = || Error::Infeasible {
        robot: p.robot,
        start: p.start,
    };
    if !allowed(p.start, 0) {
        return Err(infeasible());
    }

    let mut values = vec![vec![f64::NEG_INFINITY; w * h]; horizon + 1];
    for y in 0..h {
        for x in 0..w {
            let c = Cell::new(x, y);
            if allowed(c, horizon) {
                values[horizon][idx(c)] = 0.0;
            }
        }
    }

    let mut backups = 0;
    for t in (0..horizon).rev() {
        let weight = p.weight(t + 1);
        let (head, tail) = values.split_at_mut(t + 1);
        let (here, next) = (&mut head[t], &tail[0]);
        for y in 0..h {
            for x in 0..w {
                let c = Cell::new(x, y);
                if !allowed(c, t) {
                    continue;
                }
                backups += 1;
                let mut best = f64::NEG_INFINITY;
                for &off in &offsets {
                    let Some(n) = p.shift(c, off) else { continue };
                    let future = next[idx(n)];
                    if future == f64::NEG_INFINITY || !p.constraints.allows_edge(c, n, t) {
                        continue;
                    }
                    let q = weight * p.edge_reward(model, c, n.at(t + 1))? + future;
                    if q > best {
                        best = q;
                    }
                }
                here[idx(c)] = best;
            }
        }
    }

    if values[0][idx(p.start)] == f64::NEG_INFINITY {
        return Err(infeasible());
    }

    let mut path = Vec::with_capacity(horizon + 1);
    let mut cur = p.start;
    path.push(cur.at(0));
    for t in 0..horizon {
        let weight = p.weight(t + 1);
        let mut best: Option<(f64, Cell)> = None;
        for &off in &offsets {
            let Some(n) = p.shift(cur, off) else { continue };
            let future = values[t + 1][idx(n)];
            if future == f64::NEG_INFINITY || !p.constraints.allows_edge(cur, n, t) {
                continue;
            }
            let q = weight * p.edge_reward(model, cur, n.at(t + 1))? + future;
            if best.is_none_or(|(b, _)| q > b) {
                best = Some((q, n));
            }
        }
        let (_, n) = best.ok_or_else(infeasible)?;
        cur = n;
        path.push(cur.at(t + 1));
    }

    let discounted_reward = p.discounted_value(model, &path)?;
    Ok(SolveOutput {
        trajectory: path,
        discounted_reward,
        stats: SolveStats {
            reward_evaluations: 0,
            expansions: backups,
        },
        expanded: Vec::new(),
    })
}
