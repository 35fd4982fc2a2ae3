//! Pixel ledger and the square-root coverage objective.
//!
//! Every observation a robot makes of an actor face is recorded as a pixel
//! density. Per face, the totals saturate through a square root, so a second
//! look at an already well-covered face is worth less than a first look at a
//! neglected one.

use std::collections::BTreeMap;

use crate::camera::{aim_at, face_pixel_density};
use crate::error::{Error, Result};
use crate::world::{actor_faces_at, GridVertex, Scenario, FACES_PER_ACTOR};

/// Identifies one actor face.
pub type FaceId = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceObservation {
    pub actor: usize,
    pub face: usize,
    pub density: f64,
}

/// Pixel densities seen from `x`, one entry per actor face (zeros included).
pub fn observe(x: GridVertex, scenario: &Scenario) -> Result<Vec<FaceObservation>> {
    scenario.heightmap.check(x.cell())?;
    if x.t > scenario.horizon {
        return Err(Error::Horizon {
            t: x.t,
            horizon: scenario.horizon,
        });
    }
    let position = scenario.camera_position(x.cell());
    let pose = aim_at(position, &scenario.actors, x.t)?;
    let bodies = scenario
        .actors
        .iter()
        .map(|a| a.box_at(x.t))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(scenario.actors.len() * FACES_PER_ACTOR);
    for (j, actor) in scenario.actors.iter().enumerate() {
        let others: Vec<_> = bodies
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, b)| *b)
            .collect();
        for (f, face) in actor_faces_at(actor, x.t)?.iter().enumerate() {
            let density = face_pixel_density(&pose, &scenario.camera, face, &scenario.heightmap, &others)?;
            out.push(FaceObservation {
                actor: j,
                face: f,
                density,
            });
        }
    }
    Ok(out)
}

/// Pixel density of face `f` of actor `j` seen from `x`.
pub fn cov(x: GridVertex, j: usize, f: usize, scenario: &Scenario) -> Result<f64> {
    if j >= scenario.actors.len() || f >= FACES_PER_ACTOR {
        return Err(Error::Invalid(format!("no face {f} on actor {j}")));
    }
    Ok(observe(x, scenario)?[j * FACES_PER_ACTOR + f].density)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct EntryKey {
    actor: usize,
    face: usize,
    robot: usize,
    t: usize,
}

/// Accumulated observations keyed by `(robot, actor, face, t)`.
///
/// Face totals are always re-summed in key order, so `covp` does not depend on
/// the order observations were committed in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageLedger {
    entries: BTreeMap<EntryKey, f64>,
    totals: BTreeMap<FaceId, f64>,
}

impl CoverageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Cumulative density on face `(j, f)` across every robot and timestep.
    pub fn covp(&self, j: usize, f: usize) -> f64 {
        self.totals.get(&(j, f)).copied().unwrap_or(0.0)
    }

    pub fn get(&self, robot: usize, actor: usize, face: usize, t: usize) -> Option<f64> {
        self.entries.get(&EntryKey { actor, face, robot, t }).copied()
    }

    /// `(robot, actor, face, t, density)` for every entry.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        self.entries.iter().map(|(k, &v)| (k.robot, k.actor, k.face, k.t, v))
    }

    pub fn faces(&self) -> impl Iterator<Item = (FaceId, f64)> + '_ {
        self.totals.iter().map(|(&k, &v)| (k, v))
    }

    /// Records a single observation.
    pub fn insert(&mut self, robot: usize, actor: usize, face: usize, t: usize, density: f64) -> Result<()> {
        if !(density >= 0.0 && density.is_finite()) {
            return Err(Error::Invalid(format!(
                "density must be finite and >= 0, got {density}"
            )));
        }
        let key = EntryKey { actor, face, robot, t };
        if self.entries.contains_key(&key) {
            return Err(Error::DoubleCommit { robot, actor, face, t });
        }
        self.entries.insert(key, density);
        self.resum(actor, face);
        Ok(())
    }

    fn resum(&mut self, actor: usize, face: usize) {
        let lo = EntryKey {
            actor,
            face,
            robot: 0,
            t: 0,
        };
        let hi = EntryKey {
            actor,
            face,
            robot: usize::MAX,
            t: usize::MAX,
        };
        let mut any = false;
        let total = self
            .entries
            .range(lo..=hi)
            .map(|(_, v)| {
                any = true;
                *v
            })
            .sum::<f64>();
        if any {
            self.totals.insert((actor, face), total);
        } else {
            self.totals.remove(&(actor, face));
        }
    }

    /// Records every positive observation made by `robot` from `x`.
    pub fn commit_observations(&mut self, robot: usize, t: usize, obs: &[FaceObservation]) -> Result<()> {
        for o in obs.iter().filter(|o| o.density > 0.0) {
            self.insert(robot, o.actor, o.face, t, o.density)?;
        }
        Ok(())
    }

    /// Drops every entry made by `robot`.
    pub fn remove_robot(&mut self, robot: usize) {
        let before = self.entries.len();
        self.entries.retain(|k, _| k.robot != robot);
        if self.entries.len() != before {
            self.recompute_totals();
        }
    }

    fn recompute_totals(&mut self) {
        self.totals.clear();
        for (k, v) in &self.entries {
            *self.totals.entry((k.actor, k.face)).or_insert(0.0) += v;
        }
    }

    /// Sum over faces of `sqrt(covp)`.
    pub fn value(&self) -> f64 {
        self.totals.values().map(|v| v.sqrt()).sum()
    }
}

/// Marginal gain of a set of observations against the ledger.
pub fn marginal_gain(obs: &[FaceObservation], ledger: &CoverageLedger) -> f64 {
    obs.iter()
        .filter(|o| o.density > 0.0)
        .map(|o| {
            let prior = ledger.covp(o.actor, o.face);
            (o.density + prior).sqrt() - prior.sqrt()
        })
        .sum()
}

/// Incremental coverage gain of observing from `x` given the ledger.
pub fn covm(x: GridVertex, ledger: &CoverageLedger, scenario: &Scenario) -> Result<f64> {
    Ok(marginal_gain(&observe(x, scenario)?, ledger))
}

pub fn commit(ledger: &mut CoverageLedger, robot: usize, x: GridVertex, scenario: &Scenario) -> Result<()> {
    let obs = observe(x, scenario)?;
    ledger.commit_observations(robot, x.t, &obs)
}

fn check_joint_shape(paths: &[Vec<GridVertex>], horizon: usize) -> Result<()> {
    for (i, p) in paths.iter().enumerate() {
        if p.len() != horizon + 1 {
            return Err(Error::Shape(format!(
                "robot {i} path has {} vertices, expected {}",
                p.len(),
                horizon + 1
            )));
        }
        if let Some((t, v)) = p.iter().enumerate().find(|(t, v)| v.t != *t) {
            return Err(Error::Shape(format!("robot {i} vertex {t} carries time {}", v.t)));
        }
    }
    Ok(())
}

/// Commits all robots at all timesteps in canonical order (time-major, then
/// robot index) and returns the ledger with the per-timestep joint marginals.
pub fn stream_joint(paths: &[Vec<GridVertex>], scenario: &Scenario) -> Result<(CoverageLedger, Vec<f64>)> {
    check_joint_shape(paths, scenario.horizon)?;
    let mut ledger = CoverageLedger::new();
    let mut marginals = vec![0.0; scenario.horizon + 1];
    for (t, m) in marginals.iter_mut().enumerate() {
        for (i, p) in paths.iter().enumerate() {
            let obs = observe(p[t], scenario)?;
            *m += marginal_gain(&obs, &ledger);
            ledger.commit_observations(i, t, &obs)?;
        }
    }
    Ok((ledger, marginals))
}

/// Joint objective `g = sum_faces sqrt(covp_final)`.
pub fn objective(paths: &[Vec<GridVertex>], scenario: &Scenario) -> Result<f64> {
    Ok(stream_joint(paths, scenario)?.0.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(density: f64) -> Vec<FaceObservation> {
        vec![FaceObservation {
            actor: 0,
            face: 0,
            density,
        }]
    }

    #[test]
    fn hand_cases() {
        let mut l = CoverageLedger::new();
        assert_eq!(marginal_gain(&obs(4.0), &l), 2.0);
        l.insert(1, 0, 0, 0, 4.0).unwrap();
        assert_eq!(marginal_gain(&obs(5.0), &l), 1.0);
        assert_eq!(marginal_gain(&obs(0.0), &l), 0.0);
    }

    #[test]
    fn covp_sums_entries() {
        let mut l = CoverageLedger::new();
        assert_eq!(l.covp(0, 0), 0.0);
        l.insert(0, 0, 0, 0, 3.0).unwrap();
        l.insert(1, 0, 0, 0, 5.0).unwrap();
        assert_eq!(l.covp(0, 0), 8.0);
        assert_eq!(l.covp(0, 1), 0.0);
        assert!(matches!(l.insert(1, 0, 0, 0, 1.0), Err(Error::DoubleCommit { .. })));
        assert!(l.insert(2, 0, 0, 0, -1.0).is_err());
    }

    #[test]
    fn remove_robot_is_idempotent() {
        let mut empty = CoverageLedger::new();
        empty.remove_robot(3);
        assert!(empty.is_empty());
        let mut l = CoverageLedger::new();
        l.insert(0, 0, 0, 0, 3.0).unwrap();
        l.insert(1, 0, 0, 1, 5.0).unwrap();
        l.insert(1, 1, 2, 1, 7.0).unwrap();
        l.remove_robot(1);
        let once = l.clone();
        l.remove_robot(1);
        assert_eq!(l, once);
        assert_eq!(l.covp(0, 0), 3.0);
        assert_eq!(l.covp(1, 2), 0.0);
        assert_eq!(l.faces().count(), 1);
    }

    #[test]
    fn random_ledger_matches_brute_force_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut l = CoverageLedger::new();
        let mut raw = Vec::new();
        while raw.len() < 100 {
            let (r, a, f, t) = (
                rng.gen_range(0..4),
                rng.gen_range(0..3),
                rng.gen_range(0..4),
                rng.gen_range(0..9),
            );
            let v: f64 = rng.gen_range(0.0..500.0);
            if l.insert(r, a, f, t, v).is_ok() {
                raw.push((a, f, v));
            }
        }
        for a in 0..3 {
            for f in 0..4 {
                let expected: f64 = raw.iter().filter(|e| e.0 == a && e.1 == f).map(|e| e.2).sum();
                assert!((l.covp(a, f) - expected).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn gain_is_nonnegative_and_diminishing(
            prior in proptest::collection::vec(0.0f64..1e4, 1..6),
            extra in proptest::collection::vec(0.0f64..1e4, 1..6),
            density in 0.0f64..1e4,
        ) {
            let mut small = CoverageLedger::new();
            let mut big = CoverageLedger::new();
            for (k, v) in prior.iter().enumerate() {
                small.insert(k, 0, 0, 0, *v).unwrap();
                big.insert(k, 0, 0, 0, *v).unwrap();
            }
            for (k, v) in extra.iter().enumerate() {
                big.insert(100 + k, 0, 0, 0, *v).unwrap();
            }
            let g_small = marginal_gain(&obs(density), &small);
            let g_big = marginal_gain(&obs(density), &big);
            prop_assert!(g_big >= 0.0);
            prop_assert!(g_small >= g_big);
        }

        #[test]
        fn covp_is_commit_order_free(values in proptest::collection::vec(0.0f64..1e3, 1..20)) {
            let mut fwd = CoverageLedger::new();
            let mut rev = CoverageLedger::new();
            for (k, v) in values.iter().enumerate() {
                fwd.insert(k, 0, 0, k, *v).unwrap();
            }
            for (k, v) in values.iter().enumerate().rev() {
                rev.insert(k, 0, 0, k, *v).unwrap();
            }
            prop_assert_eq!(fwd.covp(0, 0), rev.covp(0, 0));
            prop_assert_eq!(fwd.value(), rev.value());
        }
    }
}
