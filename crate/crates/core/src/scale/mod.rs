//! Metric scale from the road plane and the mounted camera height.
//!
//! Each frame's raw scale is `camera_height_m / h`, where `h` is the
//! camera-to-road distance of the fitted plane in reconstruction units. The
//! emitted scale is a Gaussian + median filter over the last few raw
//! scales. Frames with too few road points fall back to the previous
//! validated plane, then to the previous scale.

mod filter;
mod plane;

pub use filter::{gaussian_smooth, lower_median, mixed_filter, ScaleQueue};
pub use plane::{fit_plane_least_squares, fit_plane_ransac, fit_plane_ransac_xyz, PlaneFit, PlaneModel, PlaneRansacParams};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{compose, CameraModel, Pose, TrackedPoint};

/// Planes closer than this to the camera centre cannot define a height ratio.
pub const MIN_PLANE_HEIGHT: f64 = 1e-6;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ScaleError {
    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("points are collinear")]
    AllCollinear,
    #[error("best plane has {best} inliers, {required} required")]
    NoConsensus { best: usize, required: usize },
    #[error("plane height {0} is not positive")]
    NonPositiveHeight(f64),
    #[error("scale {0} is not a positive finite number")]
    NonPositiveScale(f64),
    #[error("scale queue is empty")]
    EmptyQueue,
    #[error("{motions} motions but {scales} scales")]
    LengthMismatch { motions: usize, scales: usize },
    #[error("{0}")]
    InvalidParameter(&'static str),
}

pub fn scale_from_plane(plane: &PlaneModel, cam: &CameraModel) -> Result<f64, ScaleError> {
    if !(plane.height > MIN_PLANE_HEIGHT) {
        return Err(ScaleError::NonPositiveHeight(plane.height));
    }
    Ok(cam.camera_height_m / plane.height)
}

/// How a frame's scale was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScaleMode {
    Fit,
    ReusePlane,
    ReuseScale,
    Provisional,
}

impl ScaleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScaleMode::Fit => "fit",
            ScaleMode::ReusePlane => "reuse_plane",
            ScaleMode::ReuseScale => "reuse_scale",
            ScaleMode::Provisional => "provisional",
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScaleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fit" => Ok(ScaleMode::Fit),
            "reuse_plane" => Ok(ScaleMode::ReusePlane),
            "reuse_scale" => Ok(ScaleMode::ReuseScale),
            "provisional" => Ok(ScaleMode::Provisional),
            other => Err(format!("unknown scale mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameScale {
    pub raw: f64,
    pub filtered: f64,
    pub mode: ScaleMode,
}

/// Scale state carried from frame to frame. Must be driven sequentially in
/// frame order.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameScaleState {
    pub last_plane: Option<PlaneModel>,
    pub last_scale: Option<f64>,
    pub min_points: usize,
    pub queue: ScaleQueue,
    pub plane_params: PlaneRansacParams,
}

impl FrameScaleState {
    pub fn new(
        min_points: usize,
        window: usize,
        sigma: f64,
        plane_params: PlaneRansacParams,
    ) -> Result<Self, ScaleError> {
        if min_points < 3 {
            return Err(ScaleError::InvalidParameter("minimum road point count must be at least 3"));
        }
        Ok(Self {
            last_plane: None,
            last_scale: None,
            min_points,
            queue: ScaleQueue::new(window, sigma)?,
            plane_params,
        })
    }

    fn emit(&mut self, raw: f64, mode: ScaleMode) -> FrameScale {
        // raw is positive and finite on every path that reaches here
        self.queue.push(raw).expect("validated scale");
        let filtered = mixed_filter(&self.queue).expect("queue just received a value");
        self.last_scale = Some(filtered);
        FrameScale { raw, filtered, mode }
    }

    fn fallback(&mut self, cam: &CameraModel) -> FrameScale {
        if let Some(plane) = self.last_plane {
            if let Ok(raw) = scale_from_plane(&plane, cam) {
                return self.emit(raw, ScaleMode::ReusePlane);
            }
        }
        self.reuse_previous()
    }

    /// Reuses the previous emitted scale, or reports a provisional unit
    /// scale when nothing has been validated yet. Used directly for frames
    /// whose motion could not be estimated.
    pub fn reuse_previous(&mut self) -> FrameScale {
        match self.last_scale {
            Some(s) => self.emit(s, ScaleMode::ReuseScale),
            None => FrameScale { raw: 1.0, filtered: 1.0, mode: ScaleMode::Provisional },
        }
    }

    /// One frame of scale recovery from the selected road points.
    pub fn recover(&mut self, road_points: &[TrackedPoint], cam: &CameraModel, seed: u64) -> FrameScale {
        if road_points.len() >= self.min_points {
            let fit = fit_plane_ransac(road_points, seed, &self.plane_params);
            if let Ok(fit) = fit {
                if let Ok(raw) = scale_from_plane(&fit.plane, cam) {
                    self.last_plane = Some(fit.plane);
                    return self.emit(raw, ScaleMode::Fit);
                }
            }
        }
        self.fallback(cam)
    }
}

/// Free-function form of [`FrameScaleState::recover`].
pub fn recover_frame_scale(
    state: &mut FrameScaleState,
    road_points: &[TrackedPoint],
    cam: &CameraModel,
    seed: u64,
) -> FrameScale {
    state.recover(road_points, cam, seed)
}

/// Scales each relative motion's translation and chains the results from
/// the identity. `relative_motions[k]` is the pose of camera k+1 in camera
/// k; the output has one more pose than the input.
pub fn apply_scales(relative_motions: &[Pose], scales: &[f64]) -> Result<Vec<Pose>, ScaleError> {
    if relative_motions.len() != scales.len() {
        return Err(ScaleError::LengthMismatch { motions: relative_motions.len(), scales: scales.len() });
    }
    let mut out = Vec::with_capacity(relative_motions.len() + 1);
    let mut current = Pose::identity();
    out.push(current);
    for (m, &s) in relative_motions.iter().zip(scales) {
        let scaled = m.with_translation(m.translation() * s);
        current = compose(&current, &scaled);
        out.push(current);
    }
    Ok(out)
}
