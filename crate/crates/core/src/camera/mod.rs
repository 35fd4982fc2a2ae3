//! Pinhole camera coverage model.
//!
//! A camera deposits `focal_px^2 * cos(theta) / d^2` pixels per square meter on a
//! face whose centroid sits at distance `d`, with `theta` the angle between the
//! face normal and the ray back to the camera. Faces behind the image plane,
//! outside the field of view, back-facing, or occluded get nothing.

mod occlusion;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{ActorBox, ActorTrack, FaceGeometry, HeightMap};

pub use occlusion::{occlusion_test, segment_hits_box, terrain_blocks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl CameraIntrinsics {
    pub fn new(focal_px: f64, image_width: u32, image_height: u32) -> Result<Self> {
        if !(focal_px > 0.0 && focal_px.is_finite()) || image_width == 0 || image_height == 0 {
            return Err(Error::Invalid(format!(
                "bad intrinsics: focal {focal_px}, image {image_width}x{image_height}"
            )));
        }
        Ok(CameraIntrinsics {
            focal_px,
            image_width,
            image_height,
        })
    }

    pub fn hfov(&self) -> f64 {
        2.0 * (self.image_width as f64 / (2.0 * self.focal_px)).atan()
    }

    pub fn vfov(&self) -> f64 {
        2.0 * (self.image_height as f64 / (2.0 * self.focal_px)).atan()
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            focal_px: 400.0,
            image_width: 640,
            image_height: 480,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    /// Unit optical axis.
    pub aim: Vector3<f64>,
}

impl CameraPose {
    pub fn new(position: Vector3<f64>, aim: Vector3<f64>) -> Result<Self> {
        let n = aim.norm();
        if !(n > 1e-12 && n.is_finite()) {
            return Err(Error::DegenerateAim);
        }
        Ok(CameraPose { position, aim: aim / n })
    }

    /// Image-right and image-down axes. Roll keeps image-right horizontal; a
    /// camera looking straight down falls back to `-y` as image-right.
    fn image_axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        let up = Vector3::z();
        let mut right = self.aim.cross(&up);
        if right.norm() < 1e-9 {
            right = Vector3::new(0.0, -1.0, 0.0);
        }
        let right = right.normalize();
        let down = self.aim.cross(&right);
        (right, down)
    }

    pub fn in_frustum(&self, cam: &CameraIntrinsics, point: &Vector3<f64>) -> bool {
        let r = point - self.position;
        let depth = r.dot(&self.aim);
        if depth <= 0.0 {
            return false;
        }
        let (right, down) = self.image_axes();
        let half_w = 0.5 * cam.image_width as f64 / cam.focal_px;
        let half_h = 0.5 * cam.image_height as f64 / cam.focal_px;
        r.dot(&right).abs() <= depth * half_w && r.dot(&down).abs() <= depth * half_h
    }
}

/// Gimbal policy: point at the centroid of all actor bodies (at half height).
pub fn aim_at(position: Vector3<f64>, actors: &[ActorTrack], t: usize) -> Result<CameraPose> {
    if actors.is_empty() {
        return Err(Error::Invalid("aim_at needs at least one actor".into()));
    }
    let mut centroid = Vector3::zeros();
    for a in actors {
        centroid += a.center_at(t)?;
    }
    centroid /= actors.len() as f64;
    let dir = centroid - position;
    if dir.norm() < 1e-12 {
        return Err(Error::DegenerateAim);
    }
    CameraPose::new(position, dir)
}

/// Pixels per square meter deposited on `face`; `blockers` are the other
/// actors' bodies at the same instant.
pub fn face_pixel_density(
    pose: &CameraPose,
    cam: &CameraIntrinsics,
    face: &FaceGeometry,
    heightmap: &HeightMap,
    blockers: &[ActorBox],
) -> Result<f64> {
    let ray = face.center - pose.position;
    let d = ray.norm();
    if d == 0.0 {
        return Err(Error::DegenerateGeometry("camera sits on the face centroid"));
    }
    if !pose.in_frustum(cam, &face.center) {
        return Ok(0.0);
    }
    let cos_theta = (-face.normal.dot(&(ray / d))).max(0.0);
    if cos_theta == 0.0 {
        return Ok(0.0);
    }
    if occlusion_test(&pose.position, &face.center, heightmap, blockers) {
        return Ok(0.0);
    }
    Ok(cam.focal_px * cam.focal_px * cos_theta / (d * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{actor_faces_at, ActorPose};
    use nalgebra::{Rotation3, Vector2};

    fn flat(n: usize) -> HeightMap {
        HeightMap::new(n, n, 1.0, vec![0.0; n * n], [-(n as f64) / 2.0, -(n as f64) / 2.0]).unwrap()
    }

    fn actor(x: f64, y: f64, yaw: f64) -> ActorTrack {
        ActorTrack::new(0, [1.0, 1.0], 2.0, vec![ActorPose { x, y, yaw }]).unwrap()
    }

    #[test]
    fn fov_from_intrinsics() {
        let cam = CameraIntrinsics::default();
        assert!((cam.hfov() - 2.0 * (0.8f64).atan()).abs() < 1e-15);
        assert!(CameraIntrinsics::new(0.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(400.0, 0, 480).is_err());
    }

    #[test]
    fn aims_at_single_actor() {
        let pose = aim_at(Vector3::new(0.0, 0.0, 10.0), &[actor(10.0, 0.0, 0.0)], 0).unwrap();
        let expected = Vector3::new(10.0, 0.0, -9.0).normalize();
        assert!((pose.aim - expected).norm() < 1e-12);
        assert!((pose.aim.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aim_symmetric_pair_stays_in_plane() {
        let actors = [actor(10.0, 3.0, 0.0), actor(10.0, -3.0, 0.0)];
        let pose = aim_at(Vector3::new(0.0, 0.0, 10.0), &actors, 0).unwrap();
        assert!(pose.aim.y.abs() < 1e-12);
    }

    #[test]
    fn aim_four_actor_mean() {
        let actors: Vec<_> = [(4.0, 1.0), (6.0, 1.0), (5.0, 3.0), (5.0, -1.0)]
            .iter()
            .map(|&(x, y)| actor(x, y, 0.0))
            .collect();
        let pos = Vector3::new(0.0, 0.0, 8.0);
        let pose = aim_at(pos, &actors, 0).unwrap();
        // mean of the four bodies is (5, 1, 1)
        let expected = (Vector3::new(5.0, 1.0, 1.0) - pos).normalize();
        assert!((pose.aim - expected).norm() < 1e-12);
    }

    #[test]
    fn degenerate_aim() {
        let a = actor(0.0, 0.0, 0.0);
        assert!(matches!(
            aim_at(Vector3::new(0.0, 0.0, 1.0), &[a], 0),
            Err(Error::DegenerateAim)
        ));
    }

    fn frontal_face(d: f64) -> FaceGeometry {
        FaceGeometry {
            center: Vector3::new(d, 0.0, 5.0),
            normal: Vector3::new(-1.0, 0.0, 0.0),
            area: 2.0,
        }
    }

    #[test]
    fn frontal_density() {
        let cam = CameraIntrinsics::default();
        let hm = flat(40);
        let pose = CameraPose::new(Vector3::new(0.0, 0.0, 5.0), Vector3::x()).unwrap();
        let v = face_pixel_density(&pose, &cam, &frontal_face(10.0), &hm, &[]).unwrap();
        assert!((v - 1600.0).abs() < 1e-9);
        // back-facing twin
        let mut back = frontal_face(10.0);
        back.normal = Vector3::x();
        assert_eq!(face_pixel_density(&pose, &cam, &back, &hm, &[]).unwrap(), 0.0);
        // behind the camera
        let behind = FaceGeometry {
            center: Vector3::new(-10.0, 0.0, 5.0),
            normal: Vector3::x(),
            area: 2.0,
        };
        assert_eq!(face_pixel_density(&pose, &cam, &behind, &hm, &[]).unwrap(), 0.0);
        let on = FaceGeometry {
            center: pose.position,
            ..frontal_face(1.0)
        };
        assert!(face_pixel_density(&pose, &cam, &on, &hm, &[]).is_err());
    }

    #[test]
    fn frustum_edges() {
        let cam = CameraIntrinsics::default();
        let pose = CameraPose::new(Vector3::zeros(), Vector3::x()).unwrap();
        // half-width tangent is 0.8, half-height tangent 0.6
        assert!(pose.in_frustum(&cam, &Vector3::new(10.0, 7.9, 0.0)));
        assert!(!pose.in_frustum(&cam, &Vector3::new(10.0, 8.1, 0.0)));
        assert!(pose.in_frustum(&cam, &Vector3::new(10.0, 0.0, -5.9)));
        assert!(!pose.in_frustum(&cam, &Vector3::new(10.0, 0.0, 6.1)));
    }

    #[test]
    fn wall_blocks_face() {
        let cam = CameraIntrinsics::default();
        let mut e = vec![0.0; 40 * 40];
        // wall across the line of sight at grid x = 25 (world x = 5)
        for y in 0..40 {
            e[y * 40 + 25] = 20.0;
        }
        let hm = HeightMap::new(40, 40, 1.0, e, [-20.0, -20.0]).unwrap();
        let pose = CameraPose::new(Vector3::new(0.0, 0.0, 5.0), Vector3::x()).unwrap();
        assert_eq!(
            face_pixel_density(&pose, &cam, &frontal_face(10.0), &hm, &[]).unwrap(),
            0.0
        );
    }

    #[test]
    fn density_falls_with_distance() {
        let cam = CameraIntrinsics::default();
        let hm = flat(60);
        let pose = CameraPose::new(Vector3::new(0.0, 0.0, 5.0), Vector3::x()).unwrap();
        let mut last = f64::INFINITY;
        for d in [2.0, 3.0, 5.0, 8.0, 13.0, 21.0] {
            let v = face_pixel_density(&pose, &cam, &frontal_face(d), &hm, &[]).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn antipodal_faces_not_both_visible() {
        let cam = CameraIntrinsics::default();
        let hm = flat(60);
        for (i, yaw) in [0.0, 0.4, 1.3, 2.9, -2.2].iter().enumerate() {
            let a = actor(3.0 + i as f64, -2.0, *yaw);
            let faces = actor_faces_at(&a, 0).unwrap();
            let pose = aim_at(Vector3::new(-4.0, 1.0, 8.0), &[a], 0).unwrap();
            for k in 0..2 {
                let v0 = face_pixel_density(&pose, &cam, &faces[k], &hm, &[]).unwrap();
                let v1 = face_pixel_density(&pose, &cam, &faces[k + 2], &hm, &[]).unwrap();
                assert!(v0 == 0.0 || v1 == 0.0);
            }
        }
    }

    #[test]
    fn rigid_rotation_about_vertical_is_invariant() {
        let cam = CameraIntrinsics::default();
        let hm = flat(200);
        let a = actor(6.0, 2.0, 0.7);
        let faces = actor_faces_at(&a, 0).unwrap();
        let cam_pos = Vector3::new(-1.0, -3.0, 9.0);
        let pose = aim_at(cam_pos, std::slice::from_ref(&a), 0).unwrap();
        for angle in [0.3, 1.1, 2.5, -0.9] {
            let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
            let p = a.pose(0).unwrap();
            let moved = Vector2::new(p.x, p.y);
            let moved = rot * Vector3::new(moved.x, moved.y, 0.0);
            let ra = actor(moved.x, moved.y, p.yaw + angle);
            let rfaces = actor_faces_at(&ra, 0).unwrap();
            let rpose = aim_at(rot * cam_pos, std::slice::from_ref(&ra), 0).unwrap();
            for (f, rf) in faces.iter().zip(rfaces.iter()) {
                let v = face_pixel_density(&pose, &cam, f, &hm, &[]).unwrap();
                let rv = face_pixel_density(&rpose, &cam, rf, &hm, &[]).unwrap();
                assert!((v - rv).abs() <= 1e-9 * v.abs().max(1e-300), "{v} vs {rv}");
            }
        }
    }
}
