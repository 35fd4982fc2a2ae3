//! JSON scenario document.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActorPose, ActorTrack, Cell, Connectivity, HeightMap, MotionModel, Scenario};
use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeightMapSpec {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub elevation: Vec<f64>,
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    pub max_step: usize,
    pub flight_altitude: f64,
    pub clearance: f64,
    pub connectivity: Connectivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpec {
    pub footprint: [f64; 2],
    pub body_height: f64,
    /// `[x, y, yaw, t]`, strictly increasing in `t`.
    pub waypoints: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub heightmap: HeightMapSpec,
    pub motion: MotionSpec,
    pub horizon: usize,
    pub robots: Vec<[usize; 2]>,
    pub actors: Vec<ActorSpec>,
    pub camera: CameraIntrinsics,
    pub discount: f64,
    pub seed: u64,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        let h = &s.heightmap;
        ScenarioFile {
            heightmap: HeightMapSpec {
                width: h.width(),
                height: h.height(),
                cell_size: h.cell_size(),
                elevation: h.elevations().to_vec(),
                origin: h.origin(),
            },
            motion: MotionSpec {
                max_step: s.motion.max_step,
                flight_altitude: s.motion.flight_altitude,
                clearance: s.motion.clearance,
                connectivity: s.motion.connectivity,
            },
            horizon: s.horizon,
            robots: s.robots.iter().map(|&c| c.into()).collect(),
            actors: s
                .actors
                .iter()
                .map(|a| ActorSpec {
                    footprint: a.footprint,
                    body_height: a.body_height,
                    waypoints: a
                        .poses
                        .iter()
                        .enumerate()
                        .map(|(t, p)| [p.x, p.y, p.yaw, t as f64])
                        .collect(),
                })
                .collect(),
            camera: s.camera,
            discount: s.discount,
            seed: s.seed,
        }
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let hm = self.heightmap;
        let heightmap = HeightMap::new(hm.width, hm.height, hm.cell_size, hm.elevation, hm.origin)?;
        let m = self.motion;
        let motion = MotionModel::new(m.max_step, m.flight_altitude, m.clearance, m.connectivity)?;
        let actors = self
            .actors
            .iter()
            .enumerate()
            .map(|(id, a)| {
                let poses = interpolate_waypoints(&a.waypoints, self.horizon)
                    .map_err(|e| Error::Invalid(format!("actor {id}: {e}")))?;
                ActorTrack::new(id, a.footprint, a.body_height, poses)
            })
            .collect::<Result<Vec<_>>>()?;
        let camera = CameraIntrinsics::new(self.camera.focal_px, self.camera.image_width, self.camera.image_height)?;
        Scenario::new(
            heightmap,
            motion,
            self.horizon,
            self.robots.into_iter().map(Cell::from).collect(),
            actors,
            camera,
            self.discount,
            self.seed,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        ScenarioFile::from_json(&text)?.into_scenario()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, ScenarioFile::from_scenario(self).to_json()?)?;
        Ok(())
    }
}

/// Per-timestep poses for `t = 0..=horizon`, linear between waypoints (yaw along
/// the shorter arc) and held constant outside the waypoint span.
pub fn interpolate_waypoints(waypoints: &[[f64; 4]], horizon: usize) -> Result<Vec<ActorPose>> {
    if waypoints.is_empty() {
        return Err(Error::Invalid("no waypoints".into()));
    }
    if waypoints.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite waypoint".into()));
    }
    if waypoints.windows(2).any(|w| w[1][3] <= w[0][3]) {
        return Err(Error::Invalid("waypoint times must strictly increase".into()));
    }
    let pose = |w: &[f64; 4]| ActorPose {
        x: w[0],
        y: w[1],
        yaw: w[2],
    };
    let poses = (0..=horizon)
        .map(|t| {
            let t = t as f64;
            let first = &waypoints[0];
            let last = &waypoints[waypoints.len() - 1];
            if t <= first[3] {
                return pose(first);
            }
            if t >= last[3] {
                return pose(last);
            }
            let k = waypoints.partition_point(|w| w[3] <= t);
            let (a, b) = (&waypoints[k - 1], &waypoints[k]);
            let s = (t - a[3]) / (b[3] - a[3]);
            let mut dyaw = (b[2] - a[2]).rem_euclid(TAU);
            if dyaw > PI {
                dyaw -= TAU;
            }
            ActorPose {
                x: a[0] + s * (b[0] - a[0]),
                y: a[1] + s * (b[1] - a[1]),
                yaw: a[2] + s * dyaw,
            }
        })
        .collect();
    Ok(poses)
}
