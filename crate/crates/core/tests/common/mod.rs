#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use viewplan::coordination::ConflictKind;
use viewplan::harness::{generate_clutter, ClutterParams};
use viewplan::world::{GridVertex, Scenario};

pub fn clutter(seed: u64, size: usize, robots: usize, actors: usize, horizon: usize) -> Scenario {
    generate_clutter(&ClutterParams {
        map_width: size,
        map_height: size,
        robots,
        actors,
        horizon,
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// Random feasible walk from each robot's start.
pub fn random_joint_paths<R: Rng>(rng: &mut R, s: &Scenario) -> Vec<Vec<GridVertex>> {
    s.robots
        .iter()
        .map(|start| {
            let mut path = vec![start.at(0)];
            while path.len() <= s.horizon {
                let options = s.neighbors(*path.last().unwrap()).unwrap();
                path.push(*options.choose(rng).unwrap());
            }
            path
        })
        .collect()
}

/// Every conflict in a joint path, in the order a scan should report them:
/// `(t, vertex before swap, i, j)`.
pub fn all_conflicts(paths: &[Vec<GridVertex>]) -> Vec<(usize, ConflictKind, usize, usize)> {
    let mut out = Vec::new();
    let len = paths[0].len();
    for i in 0..paths.len() {
        for j in 0..paths.len() {
            if i >= j {
                continue;
            }
            for t in 0..len {
                if paths[i][t].cell() == paths[j][t].cell() {
                    out.push((t, ConflictKind::Vertex, i, j));
                }
                if t + 1 < len
                    && paths[i][t].cell() != paths[i][t + 1].cell()
                    && paths[i][t].cell() == paths[j][t + 1].cell()
                    && paths[i][t + 1].cell() == paths[j][t].cell()
                {
                    out.push((t, ConflictKind::EdgeSwap, i, j));
                }
            }
        }
    }
    let rank = |k: ConflictKind| match k {
        ConflictKind::Vertex => 0,
        ConflictKind::EdgeSwap => 1,
    };
    out.sort_by_key(|&(t, k, i, j)| (t, rank(k), i, j));
    out
}
