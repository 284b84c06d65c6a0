//! Rigid transforms, pinhole projection and the camera model.
//!
//! Coordinates follow the usual driving-camera convention: x to the right,
//! y down, z forward. A ground point therefore has a positive y equal to the
//! height of the camera above the road.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

/// Per-entry tolerance used when validating rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Half-width (pixels) of the band around the principal row where the
/// row-to-depth relation of a ground point is considered singular.
pub const HORIZON_BAND_PX: f64 = 1.0;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation matrix is not orthonormal with determinant 1")]
    InvalidRotation,
    #[error("similarity scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("point has non-positive depth {0}")]
    NonPositiveDepth(f64),
    #[error("pixel row {v} lies within the horizon band around cy = {cy}")]
    HorizonRow { v: f64, cy: f64 },
    #[error("invalid camera model: {0}")]
    InvalidCamera(&'static str),
}

/// Pinhole intrinsics plus the measured height of the camera above the road.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub camera_height_m: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, camera_height_m: f64) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fx.is_finite()) || !(fy > 0.0 && fy.is_finite()) {
            return Err(GeometryError::InvalidCamera("focal lengths must be positive"));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidCamera("principal point must be finite"));
        }
        if !(camera_height_m > 0.0 && camera_height_m.is_finite()) {
            return Err(GeometryError::InvalidCamera("camera height must be positive"));
        }
        Ok(Self { fx, fy, cx, cy, camera_height_m })
    }

    /// The intrinsic matrix K.
    pub fn k(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn k_inv(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Normalized image coordinates (z = 1) of a pixel.
    pub fn normalize(&self, p: Pixel) -> Vector3<f64> {
        Vector3::new((p.u - self.cx) / self.fx, (p.v - self.cy) / self.fy, 1.0)
    }
}

/// Sub-pixel image location.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// A feature tracked from frame t-1 to frame t together with its
/// triangulated position in the camera frame of t-1.
///
/// `point3d.y` is the (unscaled) height below the camera and `point3d.z`
/// the depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedPoint {
    pub pixel: Pixel,
    pub pixel_next: Pixel,
    pub point3d: Vector3<f64>,
}

impl TrackedPoint {
    pub fn height(&self) -> f64 {
        self.point3d.y
    }

    pub fn depth(&self) -> f64 {
        self.point3d.z
    }
}

/// Rigid transform acting on points as `x -> R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

fn is_rotation(r: &Matrix3<f64>) -> bool {
    if r.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let gram = r.transpose() * r - Matrix3::identity();
    gram.iter().all(|x| x.abs() <= ROTATION_TOL) && (r.determinant() - 1.0).abs() <= ROTATION_TOL
}

impl Pose {
    /// Builds a pose, rejecting rotations that are not in SO(3) within
    /// [`ROTATION_TOL`]. Inputs are never re-orthonormalized.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if !is_rotation(&rotation) || translation.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::InvalidRotation);
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// For rotations produced internally (SVD projections, exponential map).
    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation }
    }

    /// Rotation given as an axis-angle vector (exponential map).
    pub fn from_axis_angle(axis_angle: Vector3<f64>, translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::new(axis_angle).into_inner();
        Self { rotation, translation }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Self {
        Self { rotation: self.rotation, translation }
    }

    pub fn transform_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    Pose {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}

pub fn invert(p: &Pose) -> Pose {
    let rt = p.rotation.transpose();
    Pose { rotation: rt, translation: -(rt * p.translation) }
}

/// 7-DOF similarity acting as `x -> s R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    scale: f64,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Similarity {
    pub fn new(scale: f64, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GeometryError::NonPositiveScale(scale));
        }
        Pose::new(rotation, translation)?;
        Ok(Self { scale, rotation, translation })
    }

    pub fn identity() -> Self {
        Self { scale: 1.0, rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * x) + self.translation
    }

    /// Applies the similarity to a world-from-camera pose. The rotation of
    /// the pose is left-multiplied, its position transformed as a point.
    pub fn transform_pose(&self, p: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * p.rotation,
            translation: self.transform_point(&p.translation),
        }
    }
}

/// Skew-symmetric matrix `[v]x` such that `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn project(cam: &CameraModel, x: &Vector3<f64>) -> Result<Pixel, GeometryError> {
    if !(x.z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(x.z));
    }
    Ok(Pixel { u: cam.fx * x.x / x.z + cam.cx, v: cam.fy * x.y / x.z + cam.cy })
}

/// Inverse of [`project`] for a known depth.
pub fn backproject(cam: &CameraModel, p: Pixel, depth: f64) -> Vector3<f64> {
    Vector3::new((p.u - cam.cx) * depth / cam.fx, (p.v - cam.cy) * depth / cam.fy, depth)
}

/// Depth of a ground point seen at image row `v`, given its height below
/// the camera: `d = h * fy / (v - cy)`.
pub fn ground_depth_from_row(cam: &CameraModel, height: f64, v: f64) -> Result<f64, GeometryError> {
    let dv = v - cam.cy;
    if dv.abs() < HORIZON_BAND_PX {
        return Err(GeometryError::HorizonRow { v, cy: cam.cy });
    }
    Ok(height * cam.fy / dv)
}

/// Camera pitch magnitude from a rotation matrix, `|atan(-R32 / R33)|`,
/// or pi/2 when `R33 == 0`. Not used by the pipeline, which assumes a
/// level-mounted camera.
pub fn camera_pitch_magnitude(r: &Matrix3<f64>) -> f64 {
    let r32 = r[(2, 1)];
    let r33 = r[(2, 2)];
    if r33 == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (-r32 / r33).atan().abs()
    }
}

/// Geodesic angle between two rotations, computed from the Frobenius
/// distance so that identical inputs give exactly zero.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let d = (a - b).norm() / 8f64.sqrt();
    2.0 * d.min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cam() -> CameraModel {
        CameraModel::new(700.0, 700.0, 640.0, 360.0, 1.7).unwrap()
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (prop::array::uniform3(-3.0..3.0f64), prop::array::uniform3(-10.0..10.0f64))
            .prop_map(|(w, t)| Pose::from_axis_angle(Vector3::from(w), Vector3::from(t)))
    }

    #[test]
    fn identity_composition() {
        let p = compose(&Pose::identity(), &Pose::identity());
        assert_eq!(p, Pose::identity());
    }

    #[test]
    fn invert_pure_translation() {
        let p = Pose::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let q = invert(&p);
        assert_eq!(*q.rotation(), Matrix3::identity());
        assert_eq!(*q.translation(), Vector3::new(-1.0, -2.0, -3.0));
        assert_eq!(invert(&Pose::identity()), Pose::identity());
    }

    #[test]
    fn rejects_bad_rotation() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = 1.0 + 1e-6;
        assert_eq!(Pose::new(r, Vector3::zeros()), Err(GeometryError::InvalidRotation));
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn skew_axis_case() {
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
        let w = skew(&Vector3::x()) * Vector3::y();
        assert_eq!(w, Vector3::z());
    }

    #[test]
    fn project_examples() {
        let c = cam();
        let p = project(&c, &Vector3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(p, Pixel::new(640.0, 360.0));
        let p = project(&c, &Vector3::new(1.0, 1.0, 10.0)).unwrap();
        assert_relative_eq!(p.u, 710.0, epsilon = 1e-12);
        assert_relative_eq!(p.v, 430.0, epsilon = 1e-12);
        assert!(matches!(project(&c, &Vector3::new(1.0, 1.0, 0.0)), Err(GeometryError::NonPositiveDepth(_))));
        assert!(project(&c, &Vector3::new(1.0, 1.0, -2.0)).is_err());
    }

    #[test]
    fn ground_depth_examples() {
        let c = cam();
        assert_relative_eq!(ground_depth_from_row(&c, 1.7, 460.0).unwrap(), 11.9, epsilon = 1e-12);
        assert!(matches!(ground_depth_from_row(&c, 1.7, 360.5), Err(GeometryError::HorizonRow { .. })));
    }

    #[test]
    fn ground_depth_matches_plane_point() {
        let c = cam();
        for z in [4.0, 7.5, 13.0, 42.0] {
            let x = Vector3::new(-2.0, 1.7, z);
            let px = project(&c, &x).unwrap();
            let d = ground_depth_from_row(&c, 1.7, px.v).unwrap();
            assert_relative_eq!(d, z, max_relative = 1e-12);
        }
    }

    #[test]
    fn ground_depth_strictly_decreasing_below_horizon() {
        let c = cam();
        let mut prev = f64::INFINITY;
        let mut v = c.cy + HORIZON_BAND_PX;
        while v < 720.0 {
            let d = ground_depth_from_row(&c, 1.7, v).unwrap();
            assert!(d < prev);
            prev = d;
            v += 0.37;
        }
    }

    #[test]
    fn camera_pitch_from_rotation() {
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), 0.1).into_inner();
        assert_relative_eq!(camera_pitch_magnitude(&r), 0.1, epsilon = 1e-12);
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::FRAC_PI_2).into_inner();
        let mut r = r;
        r[(2, 2)] = 0.0;
        assert_eq!(camera_pitch_magnitude(&r), std::f64::consts::FRAC_PI_2);
    }

    proptest! {
        #[test]
        fn compose_matches_homogeneous_product(a in arb_pose(), b in arb_pose()) {
            let c = compose(&a, &b).to_homogeneous();
            let m = a.to_homogeneous() * b.to_homogeneous();
            for (x, y) in c.iter().zip(m.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn compose_with_inverse_is_identity(p in arb_pose()) {
            let q = compose(&p, &invert(&p)).to_homogeneous();
            for (x, y) in q.iter().zip(Matrix4::<f64>::identity().iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn double_inverse_round_trips(p in arb_pose()) {
            let q = invert(&invert(&p));
            prop_assert!((q.rotation() - p.rotation()).norm() < 1e-12);
            prop_assert!((q.translation() - p.translation()).norm() < 1e-12);
        }

        #[test]
        fn compose_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let l = compose(&compose(&a, &b), &c).to_homogeneous();
            let r = compose(&a, &compose(&b, &c)).to_homogeneous();
            prop_assert!((l - r).norm() < 1e-10);
        }

        #[test]
        fn skew_matches_cross(v in prop::array::uniform3(-5.0..5.0f64), w in prop::array::uniform3(-5.0..5.0f64)) {
            let (v, w) = (Vector3::from(v), Vector3::from(w));
            let s = skew(&v);
            let cross = Vector3::new(v.y * w.z - v.z * w.y, v.z * w.x - v.x * w.z, v.x * w.y - v.y * w.x);
            prop_assert!((s * w - cross).norm() < 1e-12);
            prop_assert_eq!(s.transpose(), -s);
            prop_assert!((s * v).norm() < 1e-15 * (1.0 + v.norm_squared()));
        }

        #[test]
        fn project_backproject_round_trip(x in -50.0..50.0f64, y in -50.0..50.0f64, z in 0.1..1000.0f64) {
            let c = cam();
            let p = Vector3::new(x, y, z);
            let back = backproject(&c, project(&c, &p).unwrap(), z);
            prop_assert!((back - p).norm() <= 1e-12 * (1.0 + p.norm()));
        }
    }
}
