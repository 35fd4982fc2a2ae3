//! Environment model: a 2.5D heightmap, the time-layered motion graph the
//! robots move on, and the actors they film.
//!
//! Cell `(x, y)` covers the square `origin + [x, x+1) * cell_size` by
//! `origin + [y, y+1) * cell_size`; robots sit at cell centers at a fixed
//! flight altitude. Actors stand on the `z = 0` ground datum.

mod scenario_file;

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};

pub use scenario_file::{ActorSpec, HeightMapSpec, MotionSpec, ScenarioFile};

/// A grid cell. Ordered by `(y, x)`, which is the tie-break order used by the
/// solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", from = "[usize; 2]")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn at(self, t: usize) -> GridVertex {
        GridVertex {
            x: self.x,
            y: self.y,
            t,
        }
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Euclidean step length in cells.
    pub fn step_length(self, other: Cell) -> f64 {
        let dx = self.x.abs_diff(other.x) as f64;
        let dy = self.y.abs_diff(other.y) as f64;
        dx.hypot(dy)
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<[usize; 2]> for Cell {
    fn from([x, y]: [usize; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

/// A vertex of the time-layered motion graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridVertex {
    pub x: usize,
    pub y: usize,
    pub t: usize,
}

impl GridVertex {
    pub const fn new(x: usize, y: usize, t: usize) -> Self {
        GridVertex { x, y, t }
    }

    pub fn cell(self) -> Cell {
        Cell::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    width: usize,
    height: usize,
    cell_size: f64,
    elevation: Vec<f64>,
    origin: [f64; 2],
}

impl HeightMap {
    /// `elevation` is row-major: index `y * width + x`.
    pub fn new(width: usize, height: usize, cell_size: f64, elevation: Vec<f64>, origin: [f64; 2]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid("heightmap dimensions must be >= 1".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Invalid(format!("cell_size must be > 0, got {cell_size}")));
        }
        if elevation.len() != width * height {
            return Err(Error::Invalid(format!(
                "elevation has {} entries, expected {}",
                elevation.len(),
                width * height
            )));
        }
        if elevation.iter().any(|e| !e.is_finite()) || !origin.iter().all(|o| o.is_finite()) {
            return Err(Error::Invalid("heightmap values must be finite".into()));
        }
        Ok(HeightMap {
            width,
            height,
            cell_size,
            elevation,
            origin,
        })
    }

    pub fn flat(width: usize, height: usize, cell_size: f64, level: f64) -> Result<Self> {
        Self::new(width, height, cell_size, vec![level; width * height], [0.0, 0.0])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevation
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn check(&self, cell: Cell) -> Result<()> {
        if cell.x < self.width && cell.y < self.height {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x: cell.x as i64,
                y: cell.y as i64,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn elevation(&self, cell: Cell) -> Result<f64> {
        self.check(cell)?;
        Ok(self.elevation[cell.y * self.width + cell.x])
    }

    /// Elevation with indices clamped into the grid.
    pub fn elevation_clamped(&self, x: i64, y: i64) -> f64 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.elevation[y * self.width + x]
    }

    pub fn cell_center(&self, cell: Cell) -> Vector2<f64> {
        Vector2::new(
            self.origin[0] + (cell.x as f64 + 0.5) * self.cell_size,
            self.origin[1] + (cell.y as f64 + 0.5) * self.cell_size,
        )
    }

    /// Continuous grid coordinates of a world point (cell `(x, y)` spans
    /// `[x, x+1) x [y, y+1)`).
    pub fn to_grid(&self, p: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(
            (p.x - self.origin[0]) / self.cell_size,
            (p.y - self.origin[1]) / self.cell_size,
        )
    }

    pub fn cell_of(&self, p: Vector2<f64>) -> Option<Cell> {
        let g = self.to_grid(p);
        let (x, y) = (g.x.floor(), g.y.floor());
        if x >= 0.0 && y >= 0.0 && (x as usize) < self.width && (y as usize) < self.height {
            Some(Cell::new(x as usize, y as usize))
        } else {
            None
        }
    }

    pub fn contains_point(&self, p: Vector2<f64>) -> bool {
        let g = self.to_grid(p);
        g.x >= 0.0 && g.y >= 0.0 && g.x <= self.width as f64 && g.y <= self.height as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    #[serde(alias = "4", alias = "4-connected")]
    Four,
    #[serde(alias = "8", alias = "8-connected")]
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub max_step: usize,
    pub flight_altitude: f64,
    pub clearance: f64,
    pub connectivity: Connectivity,
}

impl MotionModel {
    pub fn new(max_step: usize, flight_altitude: f64, clearance: f64, connectivity: Connectivity) -> Result<Self> {
        if max_step == 0 {
            return Err(Error::Invalid("max_step must be >= 1".into()));
        }
        if !(clearance >= 0.0 && flight_altitude > clearance && flight_altitude.is_finite()) {
            return Err(Error::Invalid(format!(
                "need flight_altitude > clearance >= 0, got altitude {flight_altitude}, clearance {clearance}"
            )));
        }
        Ok(MotionModel {
            max_step,
            flight_altitude,
            clearance,
            connectivity,
        })
    }

    /// True when `to` is reachable from `from` in one timestep (waiting included).
    pub fn allows_step(&self, from: Cell, to: Cell) -> bool {
        match self.connectivity {
            Connectivity::Four => from.manhattan(to) <= self.max_step,
            Connectivity::Eight => from.chebyshev(to) <= self.max_step,
        }
    }
}

pub fn traversable(v: GridVertex, h: &HeightMap, m: &MotionModel) -> Result<bool> {
    let e = h.elevation(v.cell())?;
    Ok(e + m.clearance <= m.flight_altitude)
}

/// Successors of `v` in the motion graph, ordered by `(y, x)`.
pub fn neighbors(v: GridVertex, m: &MotionModel, h: &HeightMap, horizon: usize) -> Result<Vec<GridVertex>> {
    h.check(v.cell())?;
    if v.t >= horizon {
        return Err(Error::Horizon { t: v.t, horizon });
    }
    let r = m.max_step as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let (x, y) = (v.x as i64 + dx, v.y as i64 + dy);
            if !h.contains(x, y) {
                continue;
            }
            let c = Cell::new(x as usize, y as usize);
            if !m.allows_step(v.cell(), c) {
                continue;
            }
            let next = c.at(v.t + 1);
            if traversable(next, h, m)? {
                out.push(next);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// One planar side face of an actor cuboid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub center: Vector3<f64>,
    /// Outward unit normal (horizontal).
    pub normal: Vector3<f64>,
    pub area: f64,
}

/// An actor's cuboid at one instant, used as an occluder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorBox {
    pub center: Vector2<f64>,
    pub yaw: f64,
    pub half_extents: Vector2<f64>,
    pub body_height: f64,
}

pub const FACES_PER_ACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ActorTrack {
    pub id: usize,
    /// Width along the actor's local x axis and depth along its local y axis.
    pub footprint: [f64; 2],
    pub body_height: f64,
    pub poses: Vec<ActorPose>,
}

impl ActorTrack {
    pub fn new(id: usize, footprint: [f64; 2], body_height: f64, poses: Vec<ActorPose>) -> Result<Self> {
        if !(footprint[0] > 0.0 && footprint[1] > 0.0 && body_height > 0.0) {
            return Err(Error::Invalid(format!(
                "actor {id}: footprint and body height must be positive"
            )));
        }
        if poses.is_empty() {
            return Err(Error::Invalid(format!("actor {id}: no poses")));
        }
        Ok(ActorTrack {
            id,
            footprint,
            body_height,
            poses,
        })
    }

    pub fn horizon(&self) -> usize {
        self.poses.len() - 1
    }

    pub fn pose(&self, t: usize) -> Result<ActorPose> {
        self.poses.get(t).copied().ok_or(Error::Horizon {
            t,
            horizon: self.horizon(),
        })
    }

    /// Body center at half height.
    pub fn center_at(&self, t: usize) -> Result<Vector3<f64>> {
        let p = self.pose(t)?;
        Ok(Vector3::new(p.x, p.y, 0.5 * self.body_height))
    }

    pub fn box_at(&self, t: usize) -> Result<ActorBox> {
        let p = self.pose(t)?;
        Ok(ActorBox {
            center: Vector2::new(p.x, p.y),
            yaw: p.yaw,
            half_extents: Vector2::new(0.5 * self.footprint[0], 0.5 * self.footprint[1]),
            body_height: self.body_height,
        })
    }
}

/// The four vertical faces of the actor at `t`, in local order `+x, +y, -x, -y`
/// rotated by the pose yaw.
pub fn actor_faces_at(a: &ActorTrack, t: usize) -> Result<[FaceGeometry; FACES_PER_ACTOR]> {
    let p = a.pose(t)?;
    let [w, d] = a.footprint;
    let h = a.body_height;
    let face = |k: usize| {
        let angle = p.yaw + k as f64 * FRAC_PI_2;
        let (s, c) = angle.sin_cos();
        // distance from the body center to the face and the face's side length
        let (offset, side) = if k.is_multiple_of(2) {
            (0.5 * w, d)
        } else {
            (0.5 * d, w)
        };
        FaceGeometry {
            center: Vector3::new(p.x + offset * c, p.y + offset * s, 0.5 * h),
            normal: Vector3::new(c, s, 0.0),
            area: side * h,
        }
    };
    Ok([face(0), face(1), face(2), face(3)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub heightmap: HeightMap,
    pub motion: MotionModel,
    pub horizon: usize,
    pub robots: Vec<Cell>,
    pub actors: Vec<ActorTrack>,
    pub camera: CameraIntrinsics,
    pub discount: f64,
    pub seed: u64,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        heightmap: HeightMap,
        motion: MotionModel,
        horizon: usize,
        robots: Vec<Cell>,
        actors: Vec<ActorTrack>,
        camera: CameraIntrinsics,
        discount: f64,
        seed: u64,
    ) -> Result<Self> {
        let s = Scenario {
            heightmap,
            motion,
            horizon,
            robots,
            actors,
            camera,
            discount,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be >= 1".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Invalid(format!(
                "discount must lie in (0, 1], got {}",
                self.discount
            )));
        }
        if self.robots.is_empty() {
            return Err(Error::Invalid("at least one robot required".into()));
        }
        if self.actors.is_empty() {
            return Err(Error::Invalid("at least one actor required".into()));
        }
        for (i, &r) in self.robots.iter().enumerate() {
            if !traversable(r.at(0), &self.heightmap, &self.motion)? {
                return Err(Error::Invalid(format!("robot {i} starts on a blocked cell {r:?}")));
            }
            if self.robots[..i].contains(&r) {
                return Err(Error::Invalid(format!("robot {i} shares its start {r:?}")));
            }
        }
        for a in &self.actors {
            if a.poses.len() != self.horizon + 1 {
                return Err(Error::Invalid(format!(
                    "actor {} has {} poses, expected {}",
                    a.id,
                    a.poses.len(),
                    self.horizon + 1
                )));
            }
            if a.body_height >= self.motion.flight_altitude {
                return Err(Error::Invalid(format!(
                    "actor {} is taller than the flight altitude",
                    a.id
                )));
            }
            for p in &a.poses {
                if !(p.x.is_finite() && p.y.is_finite() && p.yaw.is_finite())
                    || !self.heightmap.contains_point(Vector2::new(p.x, p.y))
                {
                    return Err(Error::Invalid(format!("actor {} leaves the map", a.id)));
                }
            }
        }
        Ok(())
    }

    pub fn traversable(&self, v: GridVertex) -> Result<bool> {
        traversable(v, &self.heightmap, &self.motion)
    }

    pub fn neighbors(&self, v: GridVertex) -> Result<Vec<GridVertex>> {
        neighbors(v, &self.motion, &self.heightmap, self.horizon)
    }

    /// Camera position for a robot occupying `cell`.
    pub fn camera_position(&self, cell: Cell) -> Vector3<f64> {
        let c = self.heightmap.cell_center(cell);
        Vector3::new(c.x, c.y, self.motion.flight_altitude)
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        let mut s = self.clone();
        s.discount = discount;
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    fn motion(conn: Connectivity) -> MotionModel {
        MotionModel::new(1, 10.0, 2.0, conn).unwrap()
    }

    #[test]
    fn traversable_respects_clearance() {
        let m = motion(Connectivity::Eight);
        let flat = HeightMap::flat(3, 3, 1.0, 0.0).unwrap();
        assert!(traversable(GridVertex::new(1, 1, 0), &flat, &m).unwrap());
        let tall = HeightMap::flat(3, 3, 1.0, 9.0).unwrap();
        assert!(!traversable(GridVertex::new(1, 1, 0), &tall, &m).unwrap());
        // exactly at the limit is still allowed
        let edge = HeightMap::flat(3, 3, 1.0, 8.0).unwrap();
        assert!(traversable(GridVertex::new(1, 1, 0), &edge, &m).unwrap());
        assert!(matches!(
            traversable(GridVertex::new(3, 0, 0), &flat, &m),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn neighborhood_sizes() {
        let h = HeightMap::flat(5, 5, 1.0, 0.0).unwrap();
        let n = neighbors(GridVertex::new(2, 2, 0), &motion(Connectivity::Eight), &h, 4).unwrap();
        assert_eq!(n.len(), 9);
        assert!(n.contains(&GridVertex::new(2, 2, 1)));
        assert!(n.iter().all(|v| v.t == 1));
        let n = neighbors(GridVertex::new(0, 0, 0), &motion(Connectivity::Four), &h, 4).unwrap();
        assert_eq!(n.len(), 3);
        let n = neighbors(GridVertex::new(0, 0, 0), &motion(Connectivity::Eight), &h, 4).unwrap();
        assert_eq!(n.len(), 4);
        assert!(matches!(
            neighbors(GridVertex::new(2, 2, 4), &motion(Connectivity::Eight), &h, 4),
            Err(Error::Horizon { .. })
        ));
    }

    #[test]
    fn neighbors_filter_walls() {
        let mut e = vec![0.0; 25];
        // wall column at x = 3
        for y in 0..5 {
            e[y * 5 + 3] = 20.0;
        }
        let h = HeightMap::new(5, 5, 1.0, e, [0.0, 0.0]).unwrap();
        let m = motion(Connectivity::Eight);
        let got = neighbors(GridVertex::new(2, 2, 0), &m, &h, 3).unwrap();
        let expected: Vec<_> = (1..=3)
            .flat_map(|y| (1..=3).map(move |x| GridVertex::new(x, y, 1)))
            .filter(|v| traversable(*v, &h, &m).unwrap())
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn neighbors_mirror_symmetric_on_symmetric_map() {
        let h = HeightMap::flat(7, 7, 1.0, 0.0).unwrap();
        let m = MotionModel::new(2, 10.0, 1.0, Connectivity::Four).unwrap();
        let a = neighbors(GridVertex::new(1, 3, 0), &m, &h, 2).unwrap();
        let mut b: Vec<_> = neighbors(GridVertex::new(5, 3, 0), &m, &h, 2)
            .unwrap()
            .into_iter()
            .map(|v| GridVertex::new(6 - v.x, v.y, v.t))
            .collect();
        b.sort_by_key(|v| (v.y, v.x));
        assert_eq!(a, b);
    }

    #[test]
    fn faces_axis_aligned() {
        let a = ActorTrack::new(
            0,
            [1.0, 1.0],
            2.0,
            vec![ActorPose {
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
            }],
        )
        .unwrap();
        let f = actor_faces_at(&a, 0).unwrap();
        let normals: Vec<_> = f.iter().map(|f| (f.normal.x.round(), f.normal.y.round())).collect();
        assert_eq!(normals, vec![(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        for face in &f {
            assert_close(face.area, 2.0);
            assert_close(face.center.z, 1.0);
            assert_close(face.normal.norm(), 1.0);
        }
        assert_close(f[0].center.x, 0.5);
        assert!(matches!(actor_faces_at(&a, 1), Err(Error::Horizon { .. })));
    }

    #[test]
    fn faces_follow_yaw() {
        let yaw = 0.3_f64;
        let a = ActorTrack::new(0, [2.0, 1.0], 1.5, vec![ActorPose { x: 3.0, y: 4.0, yaw }]).unwrap();
        let f = actor_faces_at(&a, 0).unwrap();
        let (s, c) = yaw.sin_cos();
        let axes = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (face, (ax, ay)) in f.iter().zip(axes) {
            assert_close(face.normal.x, c * ax - s * ay);
            assert_close(face.normal.y, s * ax + c * ay);
        }
        // antipodal pairs
        assert_close((f[0].normal + f[2].normal).norm(), 0.0);
        assert_close((f[1].normal + f[3].normal).norm(), 0.0);
        assert_close(f[0].area, 1.5);
        assert_close(f[1].area, 3.0);
        let a90 = ActorTrack::new(
            0,
            [1.0, 1.0],
            2.0,
            vec![ActorPose {
                x: 0.0,
                y: 0.0,
                yaw: FRAC_PI_2,
            }],
        )
        .unwrap();
        let f = actor_faces_at(&a90, 0).unwrap();
        assert!((f[0].normal - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cell_ordering_is_row_major() {
        let mut cells = vec![Cell::new(2, 0), Cell::new(0, 1), Cell::new(1, 0)];
        cells.sort();
        assert_eq!(cells, vec![Cell::new(1, 0), Cell::new(2, 0), Cell::new(0, 1)]);
    }
}
