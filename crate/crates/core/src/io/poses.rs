//! KITTI odometry pose files: one row-major 3x4 `[R|t]` per line.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{read_text, write_atomic, IoError};
use crate::eval::Trajectory;
use crate::geometry::Pose;

fn fmt_num(x: f64) -> String {
    // 12 significant digits
    format!("{:.11e}", x)
}

pub fn format_poses_kitti(poses: &[Pose]) -> String {
    let mut out = String::new();
    for p in poses {
        let r = p.rotation();
        let t = p.translation();
        let row = |i: usize| [r[(i, 0)], r[(i, 1)], r[(i, 2)], t[i]];
        let vals: Vec<String> = (0..3).flat_map(row).map(fmt_num).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

/// Parses pose text; blank lines are skipped and line numbers are 1-based.
pub fn parse_poses_kitti(text: &str, path: &Path) -> Result<Vec<Pose>, IoError> {
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| IoError::Parse { path: path.to_path_buf(), line: line_no, message };
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| parse_err(format!("`{f}` is not a number"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != 12 {
            return Err(parse_err(format!("expected 12 numbers, found {}", vals.len())));
        }
        let r = Matrix3::new(vals[0], vals[1], vals[2], vals[4], vals[5], vals[6], vals[8], vals[9], vals[10]);
        let t = Vector3::new(vals[3], vals[7], vals[11]);
        let pose = Pose::new(r, t).map_err(|_| IoError::InvalidRotation { path: path.to_path_buf(), line: line_no })?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn read_poses_kitti(path: &Path) -> Result<Trajectory, IoError> {
    let poses = parse_poses_kitti(&read_text(path)?, path)?;
    Trajectory::new(poses).map_err(|_| IoError::Parse { path: path.to_path_buf(), line: 0, message: "no poses".into() })
}

pub fn write_poses_kitti(traj: &Trajectory, path: &Path) -> Result<(), IoError> {
    write_atomic(path, format_poses_kitti(traj.poses()).as_bytes())
}
