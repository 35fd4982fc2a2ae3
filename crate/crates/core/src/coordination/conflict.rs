use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::Constraint;
use crate::world::GridVertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    Vertex,
    EdgeSwap,
}

/// Two robots in one cell at `t`, or two robots exchanging cells between `t`
/// and `t + 1`. `v_i` and `v_j` are the robots' vertices at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub robot_i: usize,
    pub robot_j: usize,
    pub v_i: GridVertex,
    pub v_j: GridVertex,
    pub t: usize,
    pub kind: ConflictKind,
}

fn check_lengths(paths: &[Vec<GridVertex>]) -> Result<usize> {
    let len = paths.first().map_or(0, Vec::len);
    if let Some((i, p)) = paths.iter().enumerate().find(|(_, p)| p.len() != len) {
        return Err(Error::Shape(format!(
            "robot {i} path has {} vertices, robot 0 has {len}",
            p.len()
        )));
    }
    Ok(len)
}

/// The earliest conflict in a joint path: timesteps ascending, pairs `(i, j)`
/// lexicographic, vertex conflicts before swaps at the same `t`.
pub fn detect_first_conflict(paths: &[Vec<GridVertex>]) -> Result<Option<Conflict>> {
    let len = check_lengths(paths)?;
    let n = paths.len();
    for t in 0..len {
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (paths[i][t], paths[j][t]);
                if a.cell() == b.cell() {
                    return Ok(Some(Conflict {
                        robot_i: i,
                        robot_j: j,
                        v_i: a,
                        v_j: b,
                        t,
                        kind: ConflictKind::Vertex,
                    }));
                }
            }
        }
        if t + 1 == len {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a0, a1) = (paths[i][t].cell(), paths[i][t + 1].cell());
                let (b0, b1) = (paths[j][t].cell(), paths[j][t + 1].cell());
                if a0 != a1 && a0 == b1 && a1 == b0 {
                    return Ok(Some(Conflict {
                        robot_i: i,
                        robot_j: j,
                        v_i: paths[i][t],
                        v_j: paths[j][t],
                        t,
                        kind: ConflictKind::EdgeSwap,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Number of vertex and swap conflicts in a joint path.
pub fn count_conflicts(paths: &[Vec<GridVertex>]) -> Result<usize> {
    let len = check_lengths(paths)?;
    let mut count = 0;
    for t in 0..len {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let (a, b) = (&paths[i], &paths[j]);
                if a[t].cell() == b[t].cell() {
                    count += 1;
                }
                if t + 1 < len
                    && a[t].cell() != a[t + 1].cell()
                    && a[t].cell() == b[t + 1].cell()
                    && a[t + 1].cell() == b[t].cell()
                {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// One constraint per side of the conflict, `(for robot_i, for robot_j)`.
pub fn split(c: &Conflict) -> (Constraint, Constraint) {
    match c.kind {
        ConflictKind::Vertex => (
            Constraint::vertex(c.robot_i, c.v_i.cell(), c.t),
            Constraint::vertex(c.robot_j, c.v_j.cell(), c.t),
        ),
        ConflictKind::EdgeSwap => (
            Constraint::edge(c.robot_i, c.v_i.cell(), c.v_j.cell(), c.t),
            Constraint::edge(c.robot_j, c.v_j.cell(), c.v_i.cell(), c.t),
        ),
    }
}
