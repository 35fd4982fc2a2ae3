//! Seeded scenario generators.
//!
//! All maps use 1 m cells with the origin at the map's minimum corner. Walls
//! rise above the flight altitude, so they both block flight and occlude.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::world::{ActorPose, ActorTrack, Cell, Connectivity, HeightMap, MotionModel, Scenario};

const ACTOR_FOOTPRINT: [f64; 2] = [0.6, 0.4];
const ACTOR_HEIGHT: f64 = 1.8;

fn param(msg: String) -> Error {
    Error::Parameter(msg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorridorParams {
    pub map_width: usize,
    pub map_height: usize,
    /// Passage width in cells, between the two walls.
    pub corridor_width: usize,
    /// First column of the walls.
    pub corridor_start: usize,
    pub corridor_length: usize,
    /// Robots start in the square of this many columns left of the corridor
    /// mouth, centered on the passage.
    pub start_zone: usize,
    pub wall_height: f64,
    pub flight_altitude: f64,
    pub clearance: f64,
    pub horizon: usize,
    pub robots: usize,
    pub actors: usize,
    /// Cells per timestep.
    pub actor_speed: f64,
    pub discount: f64,
    pub seed: u64,
}

impl Default for CorridorParams {
    fn default() -> Self {
        CorridorParams {
            map_width: 80,
            map_height: 41,
            corridor_width: 1,
            corridor_start: 6,
            corridor_length: 14,
            start_zone: 4,
            wall_height: 10.0,
            flight_altitude: 6.0,
            clearance: 1.0,
            horizon: 8,
            robots: 2,
            actors: 2,
            actor_speed: 1.0,
            discount: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BottleneckParams {
    pub map_width: usize,
    pub map_height: usize,
    /// Width of each feeder corridor in cells.
    pub feeder_width: usize,
    pub neck_width: usize,
    /// Column where the feeders join the neck.
    pub merge_x: usize,
    /// Open columns on the left where robots start.
    pub staging_width: usize,
    pub wall_height: f64,
    pub flight_altitude: f64,
    pub clearance: f64,
    pub horizon: usize,
    pub robots: usize,
    pub actors: usize,
    pub actor_speed: f64,
    pub discount: f64,
    pub seed: u64,
}

impl Default for BottleneckParams {
    fn default() -> Self {
        BottleneckParams {
            map_width: 28,
            map_height: 19,
            feeder_width: 3,
            neck_width: 3,
            merge_x: 14,
            staging_width: 3,
            wall_height: 10.0,
            flight_altitude: 6.0,
            clearance: 1.0,
            horizon: 11,
            robots: 4,
            actors: 4,
            actor_speed: 1.0,
            discount: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterParams {
    pub map_width: usize,
    pub map_height: usize,
    /// Fraction of cells raised into obstacles.
    pub obstacle_density: f64,
    pub obstacle_height: f64,
    pub flight_altitude: f64,
    pub clearance: f64,
    pub horizon: usize,
    pub robots: usize,
    pub actors: usize,
    pub actor_speed: f64,
    pub discount: f64,
    pub seed: u64,
}

impl Default for ClutterParams {
    fn default() -> Self {
        ClutterParams {
            map_width: 20,
            map_height: 20,
            obstacle_density: 0.12,
            obstacle_height: 10.0,
            flight_altitude: 6.0,
            clearance: 1.0,
            horizon: 8,
            robots: 3,
            actors: 3,
            actor_speed: 1.0,
            discount: 0.95,
            seed: 0,
        }
    }
}

/// A polyline in continuous map coordinates (cell units).
struct Polyline(Vec<[f64; 2]>);

impl Polyline {
    fn length(&self) -> f64 {
        self.0.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Point and heading at arc length `s`, clamped to the ends.
    fn at(&self, s: f64) -> ([f64; 2], f64) {
        let mut left = s.max(0.0);
        let last = self.0.len() - 2;
        for (k, w) in self.0.windows(2).enumerate() {
            let len = dist(w[0], w[1]);
            if left <= len || k == last {
                let f = if len > 0.0 { (left / len).min(1.0) } else { 0.0 };
                let heading = (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]);
                return (
                    [w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])],
                    heading,
                );
            }
            left -= len;
        }
        unreachable!("polylines have at least two points")
    }

    fn distance_to(&self, p: [f64; 2]) -> f64 {
        self.0
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let f = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + f * d[0], a[1] + f * d[1]])
}

fn actor_track(id: usize, route: &Polyline, offset: f64, speed: f64, horizon: usize) -> Result<ActorTrack> {
    let poses = (0..=horizon)
        .map(|t| {
            let ([x, y], yaw) = route.at(offset + speed * t as f64);
            ActorPose { x, y, yaw }
        })
        .collect();
    ActorTrack::new(id, ACTOR_FOOTPRINT, ACTOR_HEIGHT, poses)
}

fn check_common(flight_altitude: f64, wall_height: f64, clearance: f64, horizon: usize, speed: f64) -> Result<()> {
    if wall_height <= flight_altitude - clearance {
        return Err(param(format!(
            "walls of {wall_height} m would be flown over at altitude {flight_altitude} m"
        )));
    }
    if flight_altitude <= ACTOR_HEIGHT {
        return Err(param(format!(
            "flight altitude {flight_altitude} m is below the actors"
        )));
    }
    if horizon == 0 {
        return Err(param("horizon must be >= 1".into()));
    }
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(param(format!("actor speed {speed} must be finite and >= 0")));
    }
    Ok(())
}

fn pick_starts(rng: &mut ChaCha8Rng, mut candidates: Vec<Cell>, n: usize, what: &str) -> Result<Vec<Cell>> {
    if candidates.len() < n {
        return Err(param(format!(
            "{n} robots requested but only {} {what} cells are free",
            candidates.len()
        )));
    }
    candidates.shuffle(rng);
    candidates.truncate(n);
    Ok(candidates)
}

fn motion(flight_altitude: f64, clearance: f64) -> Result<MotionModel> {
    MotionModel::new(1, flight_altitude, clearance, Connectivity::Eight)
}

/// Two parallel walls forming a passage along `+x`; actors walk through it in
/// the same direction; robots start at random to the left of it.
pub fn generate_corridor(p: &CorridorParams) -> Result<Scenario> {
    check_common(p.flight_altitude, p.wall_height, p.clearance, p.horizon, p.actor_speed)?;
    if p.corridor_width == 0 {
        return Err(param("corridor width must be >= 1 cell".into()));
    }
    if p.corridor_start + p.corridor_length > p.map_width {
        return Err(param(format!(
            "corridor spans columns {}..{} but the map is {} wide",
            p.corridor_start,
            p.corridor_start + p.corridor_length,
            p.map_width
        )));
    }
    if p.corridor_width + 2 > p.map_height {
        return Err(param(format!(
            "corridor of width {} plus walls does not fit in {} rows",
            p.corridor_width, p.map_height
        )));
    }
    if p.corridor_start == 0 || p.start_zone == 0 {
        return Err(param("corridor must leave room on its left for the robots".into()));
    }
    if p.actors > 0 && p.corridor_length < 2 {
        return Err(param("corridor too short for actors".into()));
    }
    let (w, h) = (p.map_width, p.map_height);
    let y_lo = (h - p.corridor_width) / 2;
    let y_hi = y_lo + p.corridor_width - 1;
    let x_end = p.corridor_start + p.corridor_length;
    let mut elevation = vec![0.0; w * h];
    for x in p.corridor_start..x_end {
        elevation[(y_lo - 1) * w + x] = p.wall_height;
        elevation[(y_hi + 1) * w + x] = p.wall_height;
    }
    let heightmap = HeightMap::new(w, h, 1.0, elevation, [0.0, 0.0])?;

    let center_y = (y_lo + y_hi + 1) as f64 / 2.0;
    let lanes = p.corridor_width as f64;
    let route_start = p.corridor_start as f64 + 1.0;
    let actors = (0..p.actors)
        .map(|k| {
            // lanes spread across the passage, staggered along it
            let lane = if p.actors > 1 && p.corridor_width > 1 {
                let span = (lanes - 1.0) * 0.5;
                -span / 2.0 + span * k as f64 / (p.actors - 1) as f64
            } else {
                0.0
            };
            let y = center_y + lane;
            let route = Polyline(vec![[route_start, y], [x_end as f64 - 0.5, y]]);
            let offset = 1.5 * (p.actors - 1 - k) as f64;
            actor_track(k, &route, offset, p.actor_speed, p.horizon)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mid = (y_lo + y_hi) / 2;
    let rows = mid.saturating_sub(p.start_zone / 2)..(mid + p.start_zone.div_ceil(2)).min(h);
    let cols = p.corridor_start.saturating_sub(p.start_zone)..p.corridor_start;
    let candidates = rows.flat_map(|y| cols.clone().map(move |x| Cell::new(x, y))).collect();
    let robots = pick_starts(&mut rng, candidates, p.robots, "outside-corridor")?;

    Scenario::new(
        heightmap,
        motion(p.flight_altitude, p.clearance)?,
        p.horizon,
        robots,
        actors,
        CameraIntrinsics::default(),
        p.discount,
        p.seed,
    )
    .map_err(|e| param(e.to_string()))
}

/// Two feeder corridors that merge into one neck; half of the actors come
/// down each feeder and cross in the neck. Robots start in an open staging
/// strip on the left.
pub fn generate_bottleneck(p: &BottleneckParams) -> Result<Scenario> {
    check_common(p.flight_altitude, p.wall_height, p.clearance, p.horizon, p.actor_speed)?;
    if p.feeder_width == 0 || p.neck_width == 0 {
        return Err(param("feeder and neck widths must be >= 1 cell".into()));
    }
    let (w, h) = (p.map_width, p.map_height);
    let margin = p.feeder_width.max(p.neck_width) + 1;
    if p.staging_width == 0 || p.staging_width + 2 > p.merge_x || p.merge_x + 2 > w {
        return Err(param(format!(
            "need 0 < staging_width + 2 <= merge_x <= map_width - 2, got {}, {}, {w}",
            p.staging_width, p.merge_x
        )));
    }
    if h < 2 * margin + 3 {
        return Err(param(format!("map of {h} rows cannot hold two feeders and a neck")));
    }
    let cy = h as f64 / 2.0;
    let top = margin as f64 - 0.5 + p.feeder_width as f64 / 2.0;
    let bottom = h as f64 - top;
    let x0 = p.staging_width as f64;
    let xm = p.merge_x as f64 + 0.5;
    let feeders = [
        Polyline(vec![[x0, top], [x0 + 2.0, top], [xm, cy]]),
        Polyline(vec![[x0, bottom], [x0 + 2.0, bottom], [xm, cy]]),
    ];
    let neck = Polyline(vec![[xm, cy], [w as f64, cy]]);

    let mut elevation = vec![0.0; w * h];
    for y in 0..h {
        for x in p.staging_width..w {
            let c = [x as f64 + 0.5, y as f64 + 0.5];
            let free = feeders.iter().any(|f| f.distance_to(c) < p.feeder_width as f64 / 2.0)
                || neck.distance_to(c) < p.neck_width as f64 / 2.0;
            if !free {
                elevation[y * w + x] = p.wall_height;
            }
        }
    }
    let heightmap = HeightMap::new(w, h, 1.0, elevation, [0.0, 0.0])?;

    let feeder_len = feeders[0].length();
    let actors = (0..p.actors)
        .map(|k| {
            let side = k % 2;
            let rank = k / 2;
            // leaders start near the merge, the rest queue behind them
            let lead = (feeder_len - 3.0).max(0.0);
            let offset = lead - 1.5 * rank as f64 - 0.75 * side as f64;
            let f = &feeders[side];
            let mut pts = f.0.clone();
            pts.extend_from_slice(&neck.0[1..]);
            let route = Polyline(pts);
            actor_track(k, &route, offset.max(0.5), p.actor_speed, p.horizon)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let candidates = (0..h)
        .flat_map(|y| (0..p.staging_width).map(move |x| Cell::new(x, y)))
        .collect();
    let robots = pick_starts(&mut rng, candidates, p.robots, "staging")?;

    Scenario::new(
        heightmap,
        motion(p.flight_altitude, p.clearance)?,
        p.horizon,
        robots,
        actors,
        CameraIntrinsics::default(),
        p.discount,
        p.seed,
    )
    .map_err(|e| param(e.to_string()))
}

/// Random square obstacles; actors walk straight lines between random free
/// points; robots start on random free cells.
pub fn generate_clutter(p: &ClutterParams) -> Result<Scenario> {
    check_common(
        p.flight_altitude,
        p.obstacle_height,
        p.clearance,
        p.horizon,
        p.actor_speed,
    )?;
    if !(0.0..0.9).contains(&p.obstacle_density) {
        return Err(param(format!(
            "obstacle density {} outside [0, 0.9)",
            p.obstacle_density
        )));
    }
    let (w, h) = (p.map_width, p.map_height);
    if w < 3 || h < 3 {
        return Err(param(format!("map {w}x{h} is too small")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut elevation = vec![0.0; w * h];
    let target = (p.obstacle_density * (w * h) as f64).round() as usize;
    let mut raised = 0;
    while raised < target {
        let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let size = rng.gen_range(1..=2);
        for yy in y..(y + size).min(h) {
            for xx in x..(x + size).min(w) {
                if elevation[yy * w + xx] == 0.0 {
                    elevation[yy * w + xx] = p.obstacle_height;
                    raised += 1;
                }
            }
        }
    }
    let heightmap = HeightMap::new(w, h, 1.0, elevation, [0.0, 0.0])?;
    let free: Vec<Cell> = (0..h)
        .flat_map(|y| (0..w).map(move |x| Cell::new(x, y)))
        .filter(|c| heightmap.elevation(*c).unwrap_or(f64::INFINITY) == 0.0)
        .collect();
    if free.len() < 2 {
        return Err(param("obstacles leave no free cells".into()));
    }

    let actors = (0..p.actors)
        .map(|k| {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            let route = Polyline(vec![
                [a.x as f64 + 0.5, a.y as f64 + 0.5],
                [b.x as f64 + 0.5, b.y as f64 + 0.5],
            ]);
            actor_track(k, &route, 0.0, p.actor_speed, p.horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    let robots = pick_starts(&mut rng, free, p.robots, "free")?;

    Scenario::new(
        heightmap,
        motion(p.flight_altitude, p.clearance)?,
        p.horizon,
        robots,
        actors,
        CameraIntrinsics::default(),
        p.discount,
        p.seed,
    )
    .map_err(|e| param(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_defaults() {
        let s = generate_corridor(&CorridorParams::default()).unwrap();
        assert_eq!((s.horizon, s.robots.len(), s.actors.len()), (8, 2, 2));
        let walls = s.heightmap.elevations().iter().filter(|e| **e > 0.0).count();
        assert_eq!(walls, 2 * 14);
        for r in &s.robots {
            assert!(r.x < 6);
        }
        for a in &s.actors {
            for pose in &a.poses {
                let c = s.heightmap.cell_of([pose.x, pose.y].into()).unwrap();
                assert!((6..20).contains(&c.x) && c.y == 20, "{c:?}");
                assert_eq!(pose.yaw, 0.0);
            }
            assert!(a.poses[8].x > a.poses[0].x);
        }
    }

    #[test]
    fn corridor_parameter_errors() {
        let too_long = CorridorParams {
            corridor_length: 75,
            ..Default::default()
        };
        assert!(matches!(generate_corridor(&too_long), Err(Error::Parameter(_))));
        let zero = CorridorParams {
            corridor_width: 0,
            ..Default::default()
        };
        assert!(matches!(generate_corridor(&zero), Err(Error::Parameter(_))));
        let low_walls = CorridorParams {
            wall_height: 3.0,
            ..Default::default()
        };
        assert!(matches!(generate_corridor(&low_walls), Err(Error::Parameter(_))));
    }

    #[test]
    fn bottleneck_defaults_merge() {
        let s = generate_bottleneck(&BottleneckParams::default()).unwrap();
        assert_eq!((s.horizon, s.robots.len(), s.actors.len()), (11, 4, 4));
        // both feeders lead into the neck: every actor ends in the neck rows
        let cy = s.heightmap.height() as f64 / 2.0;
        for a in &s.actors {
            let end = a.poses.last().unwrap();
            assert!(end.x > 14.0 && (end.y - cy).abs() < 1.0, "{end:?}");
        }
        // actors from both sides start on opposite sides of the neck axis
        assert!(s.actors[0].poses[0].y < cy && s.actors[1].poses[0].y > cy);
    }

    #[test]
    fn generators_are_seeded() {
        let a = generate_corridor(&CorridorParams {
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let b = generate_corridor(&CorridorParams {
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(a, b);
        let c = generate_clutter(&ClutterParams {
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let d = generate_clutter(&ClutterParams {
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c, d);
    }
}
