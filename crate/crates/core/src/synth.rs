//! Deterministic synthetic driving sequences with full ground truth.
//!
//! For every consecutive frame pair a fresh set of points is sampled in the
//! camera frame of the first view: road points on the plane `y = h0`,
//! static clutter above it and independently moving dynamic points. The
//! camera stays level with the local road, so the frame-to-frame
//! displacement is tangent to the road plane by construction.

use std::collections::BTreeSet;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{compose, invert, project, CameraModel, Pixel, Pose, TrackedPoint};
use crate::motion::Correspondence;
use crate::road::LabelMask;

pub const LABEL_BACKGROUND: u8 = 0;
pub const LABEL_ROAD: u8 = 1;
pub const LABEL_DYNAMIC: u8 = 2;

/// Pixels this close to the image border are treated as not visible.
const BORDER_PX: f64 = 2.0;
/// Frames over which a slope segment ramps the pitch to its grade.
const SLOPE_RAMP_FRAMES: usize = 20;
const MAX_ATTEMPTS_PER_POINT: usize = 50;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SynthError {
    #[error("scene has no points")]
    EmptyScene,
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Straight { frames: usize },
    /// Constant yaw rate, turning `turn_deg` over the segment (positive
    /// turns right).
    Arc { frames: usize, turn_deg: f64 },
    /// Ramps the road grade to `grade_percent` and holds it.
    Slope { frames: usize, grade_percent: f64 },
}

impl Segment {
    pub fn frames(&self) -> usize {
        match *self {
            Segment::Straight { frames } | Segment::Arc { frames, .. } | Segment::Slope { frames, .. } => frames,
        }
    }
}

/// Parses `straight:80,arc:60:45,slope:60:5`.
pub fn parse_trajectory(s: &str) -> Result<Vec<Segment>, SynthError> {
    let bad = |part: &str| SynthError::InvalidSpec(format!("bad trajectory segment `{part}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').map(str::trim).collect();
        let frames = fields.get(1).and_then(|f| usize::from_str(f).ok()).ok_or_else(|| bad(part))?;
        let arg = || fields.get(2).and_then(|f| f64::from_str(f).ok()).filter(|x| x.is_finite()).ok_or_else(|| bad(part));
        let seg = match (fields[0], fields.len()) {
            ("straight", 2) => Segment::Straight { frames },
            ("arc", 3) => Segment::Arc { frames, turn_deg: arg()? },
            ("slope", 3) => Segment::Slope { frames, grade_percent: arg()? },
            _ => return Err(bad(part)),
        };
        out.push(seg);
    }
    Ok(out)
}

pub fn format_trajectory(segments: &[Segment]) -> String {
    segments
        .iter()
        .map(|s| match *s {
            Segment::Straight { frames } => format!("straight:{frames}"),
            Segment::Arc { frames, turn_deg } => format!("arc:{frames}:{turn_deg}"),
            Segment::Slope { frames, grade_percent } => format!("slope:{frames}:{grade_percent}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    /// Intrinsics; `camera.camera_height_m` is the road height h0.
    pub camera: CameraModel,
    pub image_width: usize,
    pub image_height: usize,
    /// Farthest sampled point depth.
    pub plane_extent_m: f64,
    pub min_depth_m: f64,
    pub road_half_width_m: f64,
    pub n_road_points: usize,
    pub n_clutter_points: usize,
    /// Height above the road of clutter points, `(min, max)`.
    pub clutter_height_range_m: (f64, f64),
    pub n_dynamic_points: usize,
    pub dynamic_velocity_mps: f64,
    pub frame_interval_s: f64,
    /// Distance travelled per frame.
    pub step_m: f64,
    pub pixel_noise_px: f64,
    /// Fraction of clutter points whose mask stamp says road.
    pub mask_leak_fraction: f64,
    /// Half-width of the square label stamp around clutter and dynamic points.
    pub stamp_radius_px: usize,
    pub trajectory: Vec<Segment>,
    pub n_frames: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            camera: CameraModel::new(700.0, 700.0, 640.0, 360.0, 1.7).expect("valid defaults"),
            image_width: 1280,
            image_height: 720,
            plane_extent_m: 30.0,
            min_depth_m: 3.0,
            road_half_width_m: 6.0,
            n_road_points: 300,
            n_clutter_points: 150,
            clutter_height_range_m: (0.3, 3.0),
            n_dynamic_points: 50,
            dynamic_velocity_mps: 5.0,
            frame_interval_s: 0.1,
            step_m: 1.0,
            pixel_noise_px: 0.5,
            mask_leak_fraction: 0.0,
            stamp_radius_px: 2,
            trajectory: vec![Segment::Straight { frames: 200 }],
            n_frames: 200,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.n_road_points + self.n_clutter_points + self.n_dynamic_points == 0 {
            return Err(SynthError::EmptyScene);
        }
        if self.n_frames < 2 {
            return bad("n_frames must be at least 2");
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image size must be positive");
        }
        if !(self.min_depth_m > 0.0 && self.plane_extent_m > self.min_depth_m) {
            return bad("need 0 < min_depth_m < plane_extent_m");
        }
        if !(self.road_half_width_m > 0.0 && self.step_m > 0.0 && self.frame_interval_s > 0.0) {
            return bad("road width, step and frame interval must be positive");
        }
        let (lo, hi) = self.clutter_height_range_m;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("clutter height range must satisfy 0 < min <= max");
        }
        if !(self.pixel_noise_px >= 0.0 && self.dynamic_velocity_mps >= 0.0) {
            return bad("noise and velocity must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.mask_leak_fraction) {
            return bad("mask_leak_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointClass {
    Road,
    Clutter,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledMatch {
    /// Noisy pixels in this frame (`a`) and the next (`b`).
    pub correspondence: Correspondence,
    pub class: PointClass,
    /// Metric position in this frame's camera coordinates.
    pub point: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameTruth {
    /// Metric world-from-camera pose.
    pub pose_gt: Pose,
    /// Matches from this frame to the next; empty for the last frame.
    pub matches: Vec<LabeledMatch>,
    /// Segmentation of this frame's image.
    pub mask: LabelMask,
    /// Metric units per reconstruction unit.
    pub true_scale: f64,
}

fn rotation(yaw: f64, pitch: f64) -> Matrix3<f64> {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    ry * rx
}

/// Metric world-from-camera poses for the scene's trajectory. Steps beyond
/// the listed segments continue straight.
pub fn trajectory_poses(spec: &SceneSpec) -> Vec<Pose> {
    let mut steps: Vec<(Segment, usize)> = Vec::new();
    for seg in &spec.trajectory {
        steps.extend((0..seg.frames()).map(|i| (*seg, i)));
    }
    let (mut yaw, mut pitch) = (0.0f64, 0.0f64);
    let mut ramp_start = 0.0;
    let mut pos = Vector3::zeros();
    let mut poses = Vec::with_capacity(spec.n_frames);
    poses.push(Pose::from_parts_unchecked(rotation(yaw, pitch), pos));
    for k in 0..spec.n_frames - 1 {
        pos += spec.step_m * (rotation(yaw, pitch) * Vector3::z());
        match steps.get(k) {
            Some((Segment::Arc { frames, turn_deg }, _)) => yaw += turn_deg.to_radians() / *frames as f64,
            Some((Segment::Slope { frames, grade_percent }, i)) => {
                if *i == 0 {
                    ramp_start = pitch;
                }
                let ramp = SLOPE_RAMP_FRAMES.min(*frames);
                if *i < ramp {
                    let target = (grade_percent / 100.0).atan();
                    pitch = ramp_start + (target - ramp_start) * (*i + 1) as f64 / ramp as f64;
                }
            }
            _ => {}
        }
        poses.push(Pose::from_parts_unchecked(rotation(yaw, pitch), pos));
    }
    poses
}

fn in_image(spec: &SceneSpec, p: &Pixel) -> bool {
    p.u >= BORDER_PX
        && p.v >= BORDER_PX
        && p.u <= spec.image_width as f64 - 1.0 - BORDER_PX
        && p.v <= spec.image_height as f64 - 1.0 - BORDER_PX
}

fn visible(spec: &SceneSpec, x: &Vector3<f64>) -> Option<Pixel> {
    if x.z < spec.min_depth_m {
        return None;
    }
    project(&spec.camera, x).ok().filter(|p| in_image(spec, p))
}

struct Candidate {
    class: PointClass,
    a: Pixel,
    b: Pixel,
    point: Vector3<f64>,
    leaked: bool,
}

fn conflicts(accepted: &[Candidate], class: PointClass, a: &Pixel, radius: usize) -> bool {
    let sep = (2 * radius + 1) as f64;
    accepted
        .iter()
        .any(|c| c.class != class && (c.a.u - a.u).abs().max((c.a.v - a.v).abs()) <= sep)
}

/// Samples the points of one frame pair. `motion` maps frame k into k+1.
fn sample_pair(spec: &SceneSpec, motion: &Pose, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
    let h0 = spec.camera.camera_height_m;
    let w = spec.road_half_width_m;
    let dt = spec.frame_interval_s;
    let mut out: Vec<Candidate> = Vec::new();
    let plan = [
        (PointClass::Dynamic, spec.n_dynamic_points),
        (PointClass::Clutter, spec.n_clutter_points),
        (PointClass::Road, spec.n_road_points),
    ];
    for (class, count) in plan {
        let mut got = 0;
        let mut attempts = 0;
        while got < count && attempts < count * MAX_ATTEMPTS_PER_POINT {
            attempts += 1;
            let z = rng.random_range(spec.min_depth_m..spec.plane_extent_m);
            let (x, y, displacement) = match class {
                PointClass::Road => (rng.random_range(-w..w), h0, Vector3::zeros()),
                PointClass::Clutter => {
                    let (lo, hi) = spec.clutter_height_range_m;
                    (rng.random_range(-1.5 * w..1.5 * w), h0 - rng.random_range(lo..=hi), Vector3::zeros())
                }
                PointClass::Dynamic => {
                    let heading = rng.random_range(0.0..std::f64::consts::TAU);
                    let v = spec.dynamic_velocity_mps * dt;
                    (rng.random_range(-w..w), h0 - rng.random_range(0.2..1.5), Vector3::new(heading.cos() * v, 0.0, heading.sin() * v))
                }
            };
            let point = Vector3::new(x, y, z);
            let leaked = class == PointClass::Clutter && rng.random_bool(spec.mask_leak_fraction);
            let Some(a) = visible(spec, &point) else { continue };
            let Some(b) = visible(spec, &motion.transform_point(&(point + displacement))) else { continue };
            if conflicts(&out, class, &a, spec.stamp_radius_px) {
                continue;
            }
            out.push(Candidate { class, a, b, point, leaked });
            got += 1;
        }
    }
    out
}

fn road_region_mask(spec: &SceneSpec) -> LabelMask {
    let cam = &spec.camera;
    let h0 = cam.camera_height_m;
    let mut mask = LabelMask::filled(
        spec.image_width,
        spec.image_height,
        LABEL_BACKGROUND,
        LABEL_ROAD,
        BTreeSet::from([LABEL_DYNAMIC]),
    );
    for v in 0..spec.image_height {
        let dy = (v as f64 - cam.cy) / cam.fy;
        if dy <= 0.0 {
            continue;
        }
        let z = h0 / dy;
        if z > spec.plane_extent_m {
            continue;
        }
        for u in 0..spec.image_width {
            let x = (u as f64 - cam.cx) / cam.fx * z;
            if x.abs() <= spec.road_half_width_m {
                mask.set(u, v, LABEL_ROAD);
            }
        }
    }
    mask
}

fn stamp(mask: &mut LabelMask, p: &Pixel, radius: usize, label: u8) {
    let Some((cx, cy)) = LabelMask::cell(*p) else { return };
    for y in cy.saturating_sub(radius)..=cy + radius {
        for x in cx.saturating_sub(radius)..=cx + radius {
            mask.set(x, y, label);
        }
    }
}

/// Generates the metric sequence described by `spec`.
pub fn generate_sequence(spec: &SceneSpec) -> Result<Vec<FrameTruth>, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.pixel_noise_px).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let poses = trajectory_poses(spec);
    let base_mask = road_region_mask(spec);

    let mut frames = Vec::with_capacity(spec.n_frames);
    for k in 0..spec.n_frames {
        let mut mask = base_mask.clone();
        let mut matches = Vec::new();
        if k + 1 < spec.n_frames {
            let motion = invert(&compose(&invert(&poses[k]), &poses[k + 1]));
            let candidates = sample_pair(spec, &motion, &mut rng);
            for c in &candidates {
                let label = match c.class {
                    PointClass::Road => continue,
                    PointClass::Dynamic => LABEL_DYNAMIC,
                    PointClass::Clutter if c.leaked => LABEL_ROAD,
                    PointClass::Clutter => LABEL_BACKGROUND,
                };
                stamp(&mut mask, &c.a, spec.stamp_radius_px, label);
            }
            for c in candidates {
                let jitter = |p: Pixel, rng: &mut ChaCha8Rng| {
                    if spec.pixel_noise_px > 0.0 {
                        Pixel::new(p.u + noise.sample(rng), p.v + noise.sample(rng))
                    } else {
                        p
                    }
                };
                let a = jitter(c.a, &mut rng);
                let b = jitter(c.b, &mut rng);
                matches.push(LabeledMatch { correspondence: Correspondence::new(a, b), class: c.class, point: c.point });
            }
        }
        frames.push(FrameTruth { pose_gt: poses[k], matches, mask, true_scale: 1.0 });
    }
    Ok(frames)
}

/// The monocular view of a metric sequence: every length divided by
/// `global_scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnscaledSequence {
    /// World-from-camera poses in reconstruction units.
    pub poses: Vec<Pose>,
    /// `relative_motions[k]` is camera k+1 expressed in camera k.
    pub relative_motions: Vec<Pose>,
    /// Per frame pair, the true points in reconstruction units with their
    /// observed pixels.
    pub clouds: Vec<Vec<TrackedPoint>>,
    pub true_scale: f64,
}

pub fn unscale(frames: &[FrameTruth], global_scale: f64) -> Result<UnscaledSequence, SynthError> {
    if !(global_scale > 0.0 && global_scale.is_finite()) {
        return Err(SynthError::InvalidSpec(format!("global scale {global_scale} must be positive")));
    }
    let shrink = |p: &Pose| p.with_translation(p.translation() / global_scale);
    let poses: Vec<Pose> = frames.iter().map(|f| shrink(&f.pose_gt)).collect();
    let relative_motions = poses.windows(2).map(|w| compose(&invert(&w[0]), &w[1])).collect();
    let clouds = frames
        .iter()
        .take(frames.len().saturating_sub(1))
        .map(|f| {
            f.matches
                .iter()
                .map(|m| TrackedPoint {
                    pixel: m.correspondence.a,
                    pixel_next: m.correspondence.b,
                    point3d: m.point / global_scale,
                })
                .collect()
        })
        .collect();
    Ok(UnscaledSequence { poses, relative_motions, clouds, true_scale: global_scale })
}
