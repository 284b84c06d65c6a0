//! Flat `key = value` configuration shared by every command.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown or repeated
//! keys are errors, and every value is validated at load time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::CameraModel;
use crate::motion::RansacParams;
use crate::scale::PlaneRansacParams;
use crate::synth::{parse_trajectory, SceneSpec, Segment};

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { line: usize, key: String, value: String, reason: String },
}

/// How frame-to-frame motion is obtained during recovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionSource {
    /// Relative motions taken from the unscaled input trajectory.
    Poses,
    /// Estimated from the matches with the eight-point algorithm, unit baseline.
    Essential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub camera_height_m: f64,
    pub road_label: u8,
    pub dynamic_labels: BTreeSet<u8>,
    pub theta0_deg: f64,
    pub beta_a: i64,
    pub window_q: usize,
    pub filter_sigma: f64,
    pub min_points: usize,
    pub seed: u64,
    pub motion_source: MotionSource,
    pub essential_iterations: usize,
    pub essential_sampson_px: f64,
    pub essential_min_disparity: f64,
    pub essential_confidence: f64,
    pub plane_iterations: usize,
    pub plane_dist_tol: f64,
    pub plane_min_inliers: usize,
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,

    // synthetic sequence generation
    pub global_scale: f64,
    pub n_frames: usize,
    pub trajectory: Vec<Segment>,
    pub plane_extent_m: f64,
    pub min_depth_m: f64,
    pub road_half_width_m: f64,
    pub n_road_points: usize,
    pub n_clutter_points: usize,
    pub clutter_height_min_m: f64,
    pub clutter_height_max_m: f64,
    pub n_dynamic_points: usize,
    pub dynamic_velocity_mps: f64,
    pub frame_interval_s: f64,
    pub step_m: f64,
    pub pixel_noise_px: f64,
    pub mask_leak_fraction: f64,
    pub stamp_radius_px: usize,
}

impl Default for Config {
    fn default() -> Self {
        let scene = SceneSpec::default();
        Self {
            fx: 700.0,
            fy: 700.0,
            cx: 640.0,
            cy: 360.0,
            image_width: 1280,
            image_height: 720,
            camera_height_m: 1.7,
            road_label: 1,
            dynamic_labels: BTreeSet::from([2]),
            theta0_deg: 5.0,
            beta_a: 1,
            window_q: 5,
            filter_sigma: 5.0,
            min_points: 12,
            seed: 0,
            motion_source: MotionSource::Poses,
            essential_iterations: 200,
            essential_sampson_px: 1.0,
            essential_min_disparity: 1.0,
            essential_confidence: 0.999,
            plane_iterations: 200,
            plane_dist_tol: 0.02,
            plane_min_inliers: 6,
            input_dir: None,
            output_dir: None,
            global_scale: 1.0,
            n_frames: scene.n_frames,
            trajectory: scene.trajectory,
            plane_extent_m: scene.plane_extent_m,
            min_depth_m: scene.min_depth_m,
            road_half_width_m: scene.road_half_width_m,
            n_road_points: scene.n_road_points,
            n_clutter_points: scene.n_clutter_points,
            clutter_height_min_m: scene.clutter_height_range_m.0,
            clutter_height_max_m: scene.clutter_height_range_m.1,
            n_dynamic_points: scene.n_dynamic_points,
            dynamic_velocity_mps: scene.dynamic_velocity_mps,
            frame_interval_s: scene.frame_interval_s,
            step_m: scene.step_m,
            pixel_noise_px: scene.pixel_noise_px,
            mask_leak_fraction: scene.mask_leak_fraction,
            stamp_radius_px: scene.stamp_radius_px,
        }
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take<T>(&mut self, key: &str, slot: &mut T, parse: impl Fn(&str) -> Result<T, String>) -> Result<(), ConfigError> {
        if let Some((line, value)) = self.map.remove(key) {
            *slot = parse(&value).map_err(|reason| ConfigError::InvalidValue { line, key: key.to_string(), value, reason })?;
        }
        Ok(())
    }
}

fn num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| "not a number".to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = num(s)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("must be positive".into())
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x: f64 = num(s)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("must be non-negative".into())
    }
}

fn finite(s: &str) -> Result<f64, String> {
    num::<f64>(s).and_then(|x| if x.is_finite() { Ok(x) } else { Err("must be finite".into()) })
}

fn at_least(min: usize) -> impl Fn(&str) -> Result<usize, String> {
    move |s| {
        let x: usize = num(s)?;
        if x >= min {
            Ok(x)
        } else {
            Err(format!("must be at least {min}"))
        }
    }
}

fn label_set(s: &str) -> Result<BTreeSet<u8>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u8>().map_err(|_| format!("`{t}` is not a label in 0..=255")))
        .collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Syntax { line, message: "expected `key = value`".into() });
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, message: "empty key".into() });
            }
            if map.insert(key.clone(), (line, value.trim().to_string())).is_some() {
                return Err(ConfigError::DuplicateKey { line, key });
            }
        }
        let mut e = Entries { map };
        let mut c = Config::default();

        e.take("fx", &mut c.fx, positive)?;
        e.take("fy", &mut c.fy, positive)?;
        e.take("cx", &mut c.cx, finite)?;
        e.take("cy", &mut c.cy, finite)?;
        e.take("image_width", &mut c.image_width, at_least(1))?;
        e.take("image_height", &mut c.image_height, at_least(1))?;
        e.take("camera_height_m", &mut c.camera_height_m, positive)?;
        e.take("road_label", &mut c.road_label, num)?;
        e.take("dynamic_labels", &mut c.dynamic_labels, label_set)?;
        e.take("theta0_deg", &mut c.theta0_deg, |s| {
            let x = non_negative(s)?;
            if x <= 90.0 {
                Ok(x)
            } else {
                Err("must lie in [0, 90]".into())
            }
        })?;
        e.take("beta_a", &mut c.beta_a, num)?;
        e.take("window_q", &mut c.window_q, at_least(1))?;
        e.take("filter_sigma", &mut c.filter_sigma, positive)?;
        e.take("min_points", &mut c.min_points, at_least(3))?;
        e.take("seed", &mut c.seed, num)?;
        e.take("motion_source", &mut c.motion_source, |s| match s {
            "poses" => Ok(MotionSource::Poses),
            "essential" => Ok(MotionSource::Essential),
            _ => Err("expected `poses` or `essential`".into()),
        })?;
        e.take("essential_iterations", &mut c.essential_iterations, at_least(1))?;
        e.take("essential_sampson_px", &mut c.essential_sampson_px, positive)?;
        e.take("essential_min_disparity", &mut c.essential_min_disparity, non_negative)?;
        e.take("essential_confidence", &mut c.essential_confidence, |s| {
            let x: f64 = num(s)?;
            if x > 0.0 && x < 1.0 {
                Ok(x)
            } else {
                Err("must lie in (0, 1)".into())
            }
        })?;
        e.take("plane_iterations", &mut c.plane_iterations, at_least(1))?;
        e.take("plane_dist_tol", &mut c.plane_dist_tol, positive)?;
        e.take("plane_min_inliers", &mut c.plane_min_inliers, at_least(3))?;
        e.take("input_dir", &mut c.input_dir, |s| Ok(Some(PathBuf::from(s))))?;
        e.take("output_dir", &mut c.output_dir, |s| Ok(Some(PathBuf::from(s))))?;

        e.take("global_scale", &mut c.global_scale, positive)?;
        e.take("n_frames", &mut c.n_frames, at_least(2))?;
        e.take("trajectory", &mut c.trajectory, |s| parse_trajectory(s).map_err(|e| e.to_string()))?;
        e.take("plane_extent_m", &mut c.plane_extent_m, positive)?;
        e.take("min_depth_m", &mut c.min_depth_m, positive)?;
        e.take("road_half_width_m", &mut c.road_half_width_m, positive)?;
        e.take("n_road_points", &mut c.n_road_points, num)?;
        e.take("n_clutter_points", &mut c.n_clutter_points, num)?;
        e.take("clutter_height_min_m", &mut c.clutter_height_min_m, positive)?;
        e.take("clutter_height_max_m", &mut c.clutter_height_max_m, positive)?;
        e.take("n_dynamic_points", &mut c.n_dynamic_points, num)?;
        e.take("dynamic_velocity_mps", &mut c.dynamic_velocity_mps, non_negative)?;
        e.take("frame_interval_s", &mut c.frame_interval_s, positive)?;
        e.take("step_m", &mut c.step_m, positive)?;
        e.take("pixel_noise_px", &mut c.pixel_noise_px, non_negative)?;
        e.take("mask_leak_fraction", &mut c.mask_leak_fraction, |s| {
            let x = non_negative(s)?;
            if x <= 1.0 {
                Ok(x)
            } else {
                Err("must lie in [0, 1]".into())
            }
        })?;
        e.take("stamp_radius_px", &mut c.stamp_radius_px, num)?;

        if let Some((key, (line, _))) = e.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        c.check_consistency()?;
        Ok(c)
    }

    fn check_consistency(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, value: String, reason: &str| ConfigError::InvalidValue { line: 0, key: key.into(), value, reason: reason.into() };
        if self.dynamic_labels.contains(&self.road_label) {
            return Err(invalid("dynamic_labels", format!("{:?}", self.dynamic_labels), "must not contain road_label"));
        }
        if self.clutter_height_max_m < self.clutter_height_min_m {
            return Err(invalid("clutter_height_max_m", self.clutter_height_max_m.to_string(), "must be >= clutter_height_min_m"));
        }
        if self.min_depth_m >= self.plane_extent_m {
            return Err(invalid("min_depth_m", self.min_depth_m.to_string(), "must be < plane_extent_m"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn camera(&self) -> CameraModel {
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.camera_height_m).expect("validated at load")
    }

    pub fn theta0_rad(&self) -> f64 {
        self.theta0_deg.to_radians()
    }

    pub fn ransac_params(&self) -> RansacParams {
        RansacParams {
            iterations: self.essential_iterations,
            sampson_px: self.essential_sampson_px,
            min_disparity: self.essential_min_disparity,
            confidence: self.essential_confidence,
        }
    }

    pub fn plane_params(&self) -> PlaneRansacParams {
        PlaneRansacParams { iterations: self.plane_iterations, dist_tol: self.plane_dist_tol, min_inliers: self.plane_min_inliers }
    }

    pub fn scene_spec(&self) -> SceneSpec {
        SceneSpec {
            camera: self.camera(),
            image_width: self.image_width,
            image_height: self.image_height,
            plane_extent_m: self.plane_extent_m,
            min_depth_m: self.min_depth_m,
            road_half_width_m: self.road_half_width_m,
            n_road_points: self.n_road_points,
            n_clutter_points: self.n_clutter_points,
            clutter_height_range_m: (self.clutter_height_min_m, self.clutter_height_max_m),
            n_dynamic_points: self.n_dynamic_points,
            dynamic_velocity_mps: self.dynamic_velocity_mps,
            frame_interval_s: self.frame_interval_s,
            step_m: self.step_m,
            pixel_noise_px: self.pixel_noise_px,
            mask_leak_fraction: self.mask_leak_fraction,
            stamp_radius_px: self.stamp_radius_px,
            trajectory: self.trajectory.clone(),
            n_frames: self.n_frames,
            seed: self.seed,
        }
    }
}
