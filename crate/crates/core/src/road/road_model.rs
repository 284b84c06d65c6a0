//! Road-model consistency: per-triangle plane pitch compared against the
//! pitch implied by the direction of travel.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use super::delaunay::{delaunay, Triangle};
use super::RoadError;
use crate::geometry::{Pixel, TrackedPoint};

/// Cross-product norm under which a triangle is collinear in 3D.
const DEGENERATE_CROSS: f64 = 1e-12;
/// Normals with |n_y| below this are treated as vertical.
const VERTICAL_NY: f64 = 1e-9;

/// Plane through a triangle: `normal . X = offset`, `normal.y >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrianglePlane {
    pub normal: Vector3<f64>,
    pub offset: f64,
    /// `asin(normal.y)`, pi/2 for a level road.
    pub theta: f64,
}

pub fn triangle_plane(points: &[TrackedPoint], tri: &Triangle) -> Result<TrianglePlane, RoadError> {
    let [i, j, k] = tri.indices;
    let (a, b, c) = (points[i].point3d, points[j].point3d, points[k].point3d);
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    if !(norm >= DEGENERATE_CROSS) {
        return Err(RoadError::DegenerateTriangle(tri.indices));
    }
    let mut normal = cross / norm;
    if normal.y < 0.0 {
        normal = -normal;
    }
    let theta = if normal.y.abs() < VERTICAL_NY {
        normal.y = normal.y.abs();
        0.0
    } else {
        normal.y.clamp(-1.0, 1.0).asin()
    };
    let offset = normal.dot(&a);
    Ok(TrianglePlane { normal, offset, theta })
}

/// Pitch of the travel direction, `asin(-t_y / |t|)`, NaN for a zero vector.
pub fn motion_pitch(t_dir: &Vector3<f64>) -> f64 {
    let n = t_dir.norm();
    if n < 1e-12 {
        return f64::NAN;
    }
    (-t_dir.y / n).clamp(-1.0, 1.0).asin()
}

/// `| |theta_r| - |theta_i| |`. Comparing magnitudes lets a level road
/// (theta_r = -pi/2, theta_i = +pi/2) pass with zero residual.
pub fn pitch_residual(theta_road: f64, theta_triangle: f64) -> f64 {
    (theta_road.abs() - theta_triangle.abs()).abs()
}

/// Re-triangulates `points` and keeps the vertices of every triangle whose
/// pitch agrees with the road pitch expected from `t_dir` to within
/// `theta0` radians. `t_dir` is the direction of travel of the camera
/// expressed in the frame of the points. Returns ascending indices.
pub fn road_model_select(points: &[TrackedPoint], t_dir: &Vector3<f64>, theta0: f64) -> Result<Vec<usize>, RoadError> {
    if points.len() < 3 {
        return Err(RoadError::TooFewPoints { required: 3, got: points.len() });
    }
    let theta_t = motion_pitch(t_dir);
    if theta_t.is_nan() {
        return Err(RoadError::ZeroMotion);
    }
    let theta_r = theta_t - FRAC_PI_2;

    let pixels: Vec<Pixel> = points.iter().map(|p| p.pixel).collect();
    let triangles = delaunay(&pixels)?;
    let mut selected = BTreeSet::new();
    for tri in &triangles {
        let Ok(plane) = triangle_plane(points, tri) else { continue };
        if pitch_residual(theta_r, plane.theta) < theta0 {
            selected.extend(tri.indices);
        }
    }
    Ok(selected.into_iter().collect())
}
