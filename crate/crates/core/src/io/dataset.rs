//! Sequence directory layout:
//!
//! ```text
//! vo_poses.txt                 unscaled world-from-camera poses (KITTI)
//! gt_poses.txt                 metric ground truth (synthetic sequences only)
//! matches/000000_000001.csv    matches from frame k to k+1
//! masks/000000.pgm             label mask of frame k
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::{encode_pgm, format_matches, format_poses_kitti, mask_file_name, matches_file_name, parse_poses_kitti, read_mask, read_matches, read_text, write_all_atomic, IoError};
use crate::geometry::Pose;
use crate::motion::Correspondence;
use crate::road::LabelMask;
use crate::synth::{unscale, FrameTruth, SynthError};

pub const VO_POSES: &str = "vo_poses.txt";
pub const GT_POSES: &str = "gt_poses.txt";
pub const MATCHES_DIR: &str = "matches";
pub const MASKS_DIR: &str = "masks";

/// Inputs of one frame pair (k, k+1).
#[derive(Clone, Debug, PartialEq)]
pub struct PairInput {
    pub matches: Vec<Correspondence>,
    /// Mask of frame k, in which the `a` pixels were observed.
    pub mask: LabelMask,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceInput {
    pub poses: Vec<Pose>,
    pub pairs: Vec<PairInput>,
}

pub fn matches_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(MATCHES_DIR).join(matches_file_name(k, k + 1))
}

pub fn mask_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(MASKS_DIR).join(mask_file_name(k))
}

/// Loads every pair of the sequence. The pose file decides the frame count.
pub fn read_sequence(
    dir: &Path,
    image_size: (usize, usize),
    road_label: u8,
    dynamic_labels: &BTreeSet<u8>,
) -> Result<SequenceInput, IoError> {
    let pose_path = dir.join(VO_POSES);
    let poses = parse_poses_kitti(&read_text(&pose_path)?, &pose_path)?;
    let mut pairs = Vec::with_capacity(poses.len().saturating_sub(1));
    for k in 0..poses.len().saturating_sub(1) {
        let matches = read_matches(&matches_path(dir, k))?;
        let mask = read_mask(&mask_path(dir, k), image_size, road_label, dynamic_labels)?;
        pairs.push(PairInput { matches, mask });
    }
    Ok(SequenceInput { poses, pairs })
}

/// Writes a generated sequence, its poses reduced by `global_scale`.
pub fn write_synthetic_sequence(dir: &Path, frames: &[FrameTruth], global_scale: f64) -> Result<(), IoError> {
    let unscaled = unscale(frames, global_scale).map_err(|e: SynthError| IoError::Parse {
        path: dir.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let gt: Vec<Pose> = frames.iter().map(|f| f.pose_gt).collect();
    let mut files = vec![
        (dir.join(VO_POSES), format_poses_kitti(&unscaled.poses).into_bytes()),
        (dir.join(GT_POSES), format_poses_kitti(&gt).into_bytes()),
    ];
    for (k, f) in frames.iter().enumerate() {
        if k + 1 < frames.len() {
            let m: Vec<Correspondence> = f.matches.iter().map(|m| m.correspondence).collect();
            files.push((matches_path(dir, k), format_matches(&m).into_bytes()));
        }
        files.push((mask_path(dir, k), encode_pgm(&f.mask)));
    }
    write_all_atomic(&files)
}
