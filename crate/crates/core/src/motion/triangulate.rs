use nalgebra::{Matrix4, Vector3};

use super::Correspondence;
use crate::geometry::{CameraModel, Pose, TrackedPoint};

/// Rays closer to parallel than this (sine of the angle) carry no depth.
const MIN_RAY_SINE: f64 = 1e-9;

/// Linear (DLT) triangulation of one correspondence with cameras
/// `[I | 0]` and `[R | t]` in normalized coordinates. Returns the point in
/// the frame of the first camera, or `None` when the rays are parallel or
/// the solution lies at infinity.
pub fn triangulate_point(motion: &Pose, xa: &Vector3<f64>, xb: &Vector3<f64>) -> Option<Vector3<f64>> {
    let r = motion.rotation();
    let t = motion.translation();

    let ray_b = r.transpose() * xb;
    let sine = xa.cross(&ray_b).norm() / (xa.norm() * ray_b.norm());
    if !(sine >= MIN_RAY_SINE) {
        return None;
    }

    let mut p2 = nalgebra::Matrix3x4::zeros();
    p2.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    p2.fixed_view_mut::<3, 1>(0, 3).copy_from(t);

    let mut a = Matrix4::zeros();
    // first camera rows: x * P[2] - P[0], y * P[2] - P[1] with P = [I | 0]
    a.set_row(0, &nalgebra::RowVector4::new(-1.0, 0.0, xa.x, 0.0));
    a.set_row(1, &nalgebra::RowVector4::new(0.0, -1.0, xa.y, 0.0));
    a.set_row(2, &(p2.row(2) * xb.x - p2.row(0)));
    a.set_row(3, &(p2.row(2) * xb.y - p2.row(1)));

    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let h = v_t.row(idx);
    if h[3].abs() < f64::EPSILON * h.norm() {
        return None;
    }
    Some(Vector3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]))
}

/// Triangulates every correspondence under `motion` (which maps frame t-1
/// into frame t). Points at or behind either camera and points whose rays
/// are parallel are dropped.
pub fn triangulate(motion: &Pose, matches: &[Correspondence], cam: &CameraModel) -> Vec<TrackedPoint> {
    if motion.translation().norm() == 0.0 {
        return Vec::new();
    }
    matches
        .iter()
        .filter_map(|m| {
            let xa = cam.normalize(m.a);
            let xb = cam.normalize(m.b);
            let x = triangulate_point(motion, &xa, &xb)?;
            let xt = motion.transform_point(&x);
            (x.z > 0.0 && xt.z > 0.0).then_some(TrackedPoint { pixel: m.a, pixel_next: m.b, point3d: x })
        })
        .collect()
}
