//! Frame-by-frame metric scale recovery over a whole sequence.
//!
//! For each pair (k, k+1): drop matches on dynamic labels, obtain the
//! relative motion, triangulate, select road points, fit the road plane,
//! and filter the resulting scale. The scaled trajectory chains the
//! rescaled relative motions from the identity.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{compose, invert, Pose};
use crate::io::dataset::{read_sequence, SequenceInput};
use crate::io::{format_poses_kitti, write_all_atomic, Config, IoError, MotionSource};
use crate::motion::{decompose_essential, estimate_essential, triangulate, MotionError};
use crate::road::{filter_dynamic_matches, select_road_points};
use crate::scale::{apply_scales, FrameScaleState, ScaleError, ScaleMode};

pub const SCALED_POSES: &str = "scaled_poses.txt";
pub const SCALES_CSV: &str = "scales.csv";
pub const RUN_LOG: &str = "run.log";

const PLANE_SEED_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

/// Outcome of one frame pair. `frame_index` is the later frame of the pair,
/// whose position the scale fixes.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub raw_scale: f64,
    pub filtered_scale: f64,
    pub mode: ScaleMode,
    pub n_matches: usize,
    pub n_static: usize,
    pub n_triangulated: usize,
    pub n_road: usize,
    /// Set when the motion could not be estimated for this pair.
    pub motion_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoverOutput {
    pub poses: Vec<Pose>,
    pub records: Vec<FrameRecord>,
}

impl RecoverOutput {
    pub fn scales_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame_index", "raw_scale", "filtered_scale", "mode"]).expect("in-memory write");
        for r in &self.records {
            w.write_record([r.frame_index.to_string(), r.raw_scale.to_string(), r.filtered_scale.to_string(), r.mode.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn run_log(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(
                out,
                "frame {}: mode={} matches={} static={} triangulated={} road={} scale={}",
                r.frame_index, r.mode, r.n_matches, r.n_static, r.n_triangulated, r.n_road, r.filtered_scale
            );
            if let Some(why) = &r.motion_failure {
                let _ = write!(out, " motion_failure=\"{why}\"");
            }
            out.push('\n');
        }
        out
    }
}

fn frame_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

/// Runs recovery on an in-memory sequence. Per-frame estimation problems
/// degrade to fallback modes and are never fatal.
pub fn run_recover(config: &Config, input: &SequenceInput) -> Result<RecoverOutput, PipelineError> {
    let n = input.poses.len();
    if n < 2 {
        return Err(PipelineError::InvalidInput(format!("need at least 2 poses, got {n}")));
    }
    if input.pairs.len() != n - 1 {
        return Err(PipelineError::InvalidInput(format!("{} poses but {} frame pairs", n, input.pairs.len())));
    }
    let cam = config.camera();
    let mut state = FrameScaleState::new(config.min_points, config.window_q, config.filter_sigma, config.plane_params())?;
    let mut relative = Vec::with_capacity(n - 1);
    let mut scales = Vec::with_capacity(n - 1);
    let mut records = Vec::with_capacity(n - 1);

    for (k, pair) in input.pairs.iter().enumerate() {
        let seed = frame_seed(config.seed, k);
        let statics = filter_dynamic_matches(&pair.matches, &pair.mask);

        // `motion` maps frame k into frame k+1; `step` is camera k+1 in frame k
        let motion: Result<Pose, MotionError> = match config.motion_source {
            MotionSource::Poses => Ok(invert(&compose(&invert(&input.poses[k]), &input.poses[k + 1]))),
            MotionSource::Essential => estimate_essential(&statics, &cam, seed, &config.ransac_params())
                .and_then(|model| decompose_essential(&model, &model.inliers(&statics), &cam))
                .map(|m| m.to_pose()),
        };

        let mut record = FrameRecord {
            frame_index: k + 1,
            raw_scale: 1.0,
            filtered_scale: 1.0,
            mode: ScaleMode::Provisional,
            n_matches: pair.matches.len(),
            n_static: statics.len(),
            n_triangulated: 0,
            n_road: 0,
            motion_failure: None,
        };

        let (step, frame_scale) = match motion {
            Ok(motion) => {
                let step = invert(&motion);
                let points = triangulate(&motion, &statics, &cam);
                let road = select_road_points(&points, &pair.mask, step.translation(), config.beta_a, config.theta0_rad());
                let road_points: Vec<_> = road.iter().map(|&i| points[i]).collect();
                record.n_triangulated = points.len();
                record.n_road = road_points.len();
                (step, state.recover(&road_points, &cam, seed ^ PLANE_SEED_STREAM))
            }
            Err(e) => {
                log::warn!("frame {}: motion estimation failed: {e}", k + 1);
                record.motion_failure = Some(e.to_string());
                let step = relative.last().copied().unwrap_or_else(Pose::identity);
                (step, state.reuse_previous())
            }
        };
        if frame_scale.mode != ScaleMode::Fit {
            log::info!("frame {}: {} ({} road points)", k + 1, frame_scale.mode, record.n_road);
        }
        record.raw_scale = frame_scale.raw;
        record.filtered_scale = frame_scale.filtered;
        record.mode = frame_scale.mode;
        relative.push(step);
        scales.push(frame_scale.filtered);
        records.push(record);
    }

    let poses = apply_scales(&relative, &scales)?;
    Ok(RecoverOutput { poses, records })
}

/// Reads a sequence directory, runs recovery, and writes the scaled
/// trajectory, per-frame scales and run log into `out_dir`. Nothing is
/// written unless the whole run succeeds.
pub fn recover_dir(config: &Config, in_dir: &Path, out_dir: &Path) -> Result<RecoverOutput, PipelineError> {
    let input = read_sequence(in_dir, (config.image_width, config.image_height), config.road_label, &config.dynamic_labels)?;
    let output = run_recover(config, &input)?;
    let files: Vec<(PathBuf, Vec<u8>)> = vec![
        (out_dir.join(SCALED_POSES), format_poses_kitti(&output.poses).into_bytes()),
        (out_dir.join(SCALES_CSV), output.scales_csv().into_bytes()),
        (out_dir.join(RUN_LOG), output.run_log().into_bytes()),
    ];
    write_all_atomic(&files)?;
    Ok(output)
}
