//! Two-frame relative motion from pixel correspondences.
//!
//! The convention throughout is that a motion maps points from the camera
//! frame of t-1 into the camera frame of t: `X_t = R X_{t-1} + t`. The
//! pose of camera t expressed in camera t-1 (what a trajectory chains) is
//! the inverse of that motion.

mod essential;
mod pnp;
mod triangulate;

pub use essential::{decompose_essential, estimate_essential, essential_candidates, sampson_distance};
pub use pnp::{pnp_residuals_and_jacobian, refine_pose_pnp, PnpOptions, PnpReport};
pub use triangulate::{triangulate, triangulate_point};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::{Pixel, Pose};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MotionError {
    #[error("need at least {required} correspondences, got {got}")]
    InsufficientMatches { required: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("cheirality test is ambiguous ({best} vs {second} points in front)")]
    CheiralityAmbiguous { best: usize, second: usize },
    #[error("normal equations are singular")]
    SingularNormalEquations,
    #[error("point {0} lies behind the camera at the initial pose")]
    PointBehindCamera(usize),
    #[error("observation count {observations} does not match point count {points}")]
    LengthMismatch { points: usize, observations: usize },
}

/// A pixel match between frame t-1 (`a`) and frame t (`b`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub a: Pixel,
    pub b: Pixel,
}

impl Correspondence {
    pub const fn new(a: Pixel, b: Pixel) -> Self {
        Self { a, b }
    }

    pub fn disparity(&self) -> f64 {
        self.a.distance(&self.b)
    }
}

/// RANSAC settings for the essential matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Inlier threshold on the Sampson distance, in pixels.
    pub sampson_px: f64,
    /// Median pixel disparity below which the pair is treated as having no
    /// parallax.
    pub min_disparity: f64,
    /// Early-exit confidence for the adaptive iteration count.
    pub confidence: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { iterations: 200, sampson_px: 1.0, min_disparity: 1.0, confidence: 0.999 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EssentialModel {
    pub e: Matrix3<f64>,
    pub inlier_mask: Vec<bool>,
}

impl EssentialModel {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }

    /// The subset of `matches` flagged as inliers, in order.
    pub fn inliers(&self, matches: &[Correspondence]) -> Vec<Correspondence> {
        matches
            .iter()
            .zip(&self.inlier_mask)
            .filter_map(|(m, &keep)| keep.then_some(*m))
            .collect()
    }
}

/// Rotation and unit translation direction from frame t-1 to frame t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeMotion {
    pub rotation: Matrix3<f64>,
    pub t_dir: Vector3<f64>,
}

impl RelativeMotion {
    /// The motion as a rigid transform with a unit baseline.
    pub fn to_pose(&self) -> Pose {
        Pose::from_parts_unchecked(self.rotation, self.t_dir)
    }
}
