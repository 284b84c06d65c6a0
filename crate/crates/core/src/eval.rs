//! Trajectory accuracy metrics: absolute trajectory error after similarity
//! alignment, and KITTI-style relative pose error over 100..800 m segments.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{invert, compose, rotation_angle_between, Pose, Similarity};

/// Segment lengths in metres of the KITTI odometry benchmark.
pub const KITTI_SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectories have {estimate} and {reference} poses")]
    LengthMismatch { estimate: usize, reference: usize },
    #[error("alignment is degenerate: {0}")]
    DegenerateGeometry(&'static str),
    #[error("reference path is {length_m:.3} m long, shorter than every segment length")]
    PathTooShort { length_m: f64 },
}

/// World-from-camera poses in frame order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
    timestamps: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self, EvalError> {
        if poses.is_empty() {
            return Err(EvalError::EmptyTrajectory);
        }
        Ok(Self { poses, timestamps: None })
    }

    pub fn with_timestamps(poses: Vec<Pose>, timestamps: Vec<f64>) -> Result<Self, EvalError> {
        if timestamps.len() != poses.len() {
            return Err(EvalError::LengthMismatch { estimate: poses.len(), reference: timestamps.len() });
        }
        let mut t = Self::new(poses)?;
        t.timestamps = Some(timestamps);
        Ok(t)
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.poses.iter().map(|p| *p.translation()).collect()
    }

    /// Cumulative arc length of the camera centres, starting at 0.
    pub fn arc_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.poses.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.poses.windows(2) {
            acc += (w[1].translation() - w[0].translation()).norm();
            out.push(acc);
        }
        out
    }

    pub fn path_length(&self) -> f64 {
        *self.arc_lengths().last().unwrap_or(&0.0)
    }

    pub fn transformed(&self, sim: &Similarity) -> Self {
        Self { poses: self.poses.iter().map(|p| sim.transform_pose(p)).collect(), timestamps: self.timestamps.clone() }
    }
}

fn check_lengths(estimate: &Trajectory, reference: &Trajectory) -> Result<(), EvalError> {
    if estimate.len() != reference.len() {
        return Err(EvalError::LengthMismatch { estimate: estimate.len(), reference: reference.len() });
    }
    Ok(())
}

fn mean(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().fold(Vector3::zeros(), |a, p| a + p) / points.len() as f64
}

/// Closed-form similarity (Umeyama) taking `src` onto `dst`. Tolerates
/// collinear input, for which the rotation about the common line is
/// arbitrary but the residual is still minimal.
fn align_points(src: &[Vector3<f64>], dst: &[Vector3<f64>], with_scale: bool) -> Similarity {
    if src == dst {
        return Similarity::identity();
    }
    // one pass of iterative refinement: re-solve on the already aligned
    // points, which removes most of the rounding left by the first solve
    let first = umeyama_once(src, dst, with_scale);
    let moved: Vec<Vector3<f64>> = src.iter().map(|p| first.transform_point(p)).collect();
    let fix = umeyama_once(&moved, dst, with_scale);
    let rotation = fix.rotation() * first.rotation();
    let translation = fix.scale() * (fix.rotation() * first.translation()) + fix.translation();
    Similarity::new(fix.scale() * first.scale(), rotation, translation).unwrap_or(first)
}

fn umeyama_once(src: &[Vector3<f64>], dst: &[Vector3<f64>], with_scale: bool) -> Similarity {
    let n = src.len() as f64;
    let mu_p = mean(src);
    let mu_q = mean(dst);
    let mut cov = Matrix3::zeros();
    let mut var_p = 0.0;
    for (p, q) in src.iter().zip(dst) {
        let dp = p - mu_p;
        cov += (q - mu_q) * dp.transpose();
        var_p += dp.norm_squared();
    }
    cov /= n;
    var_p /= n;

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let mut s_diag = Vector3::new(1.0, 1.0, 1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        // flip the axis of the smallest singular value
        let (k, _) = svd.singular_values.argmin();
        s_diag[k] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&s_diag) * v_t;
    let scale = if with_scale && var_p > 0.0 {
        svd.singular_values.dot(&s_diag) / var_p
    } else {
        1.0
    };
    let translation = mu_q - scale * (rotation * mu_p);
    Similarity::new(scale, rotation, translation).unwrap_or_else(|_| Similarity::identity())
}

/// Least-squares similarity mapping the estimate positions onto the
/// reference positions. `with_scale = false` fixes the scale at 1.
pub fn umeyama_align(estimate: &Trajectory, reference: &Trajectory, with_scale: bool) -> Result<Similarity, EvalError> {
    check_lengths(estimate, reference)?;
    if estimate.len() < 3 {
        return Err(EvalError::DegenerateGeometry("at least 3 poses are required"));
    }
    let src = estimate.positions();
    let dst = reference.positions();
    for pts in [&src, &dst] {
        let mu = mean(pts);
        let scatter = pts.iter().fold(Matrix3::zeros(), |a, p| a + (p - mu) * (p - mu).transpose());
        let mut ev: Vec<f64> = scatter.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
            return Err(EvalError::DegenerateGeometry("positions are collinear"));
        }
    }
    Ok(align_points(&src, &dst, with_scale))
}

/// Root-mean-square position error, optionally after 7-DOF alignment of the
/// estimate onto the reference.
pub fn ate(estimate: &Trajectory, reference: &Trajectory, align: bool) -> Result<f64, EvalError> {
    check_lengths(estimate, reference)?;
    let src = estimate.positions();
    let dst = reference.positions();
    let sim = if align { align_points(&src, &dst, true) } else { Similarity::identity() };
    let sum: f64 = src
        .iter()
        .zip(&dst)
        .map(|(p, q)| {
            let p = if align { sim.transform_point(p) } else { *p };
            (p - q).norm_squared()
        })
        .sum();
    Ok((sum / src.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpeResult {
    pub trans_percent: f64,
    pub rot_deg_per_m: f64,
    pub segments: usize,
}

/// First frame whose reference arc length exceeds `dist[first] + len`.
fn segment_end(dist: &[f64], first: usize, len: f64) -> Option<usize> {
    (first..dist.len()).find(|&i| dist[i] > dist[first] + len)
}

/// KITTI relative pose error with every frame as a candidate start.
/// Segment lengths the reference path cannot accommodate are skipped.
pub fn rpe_kitti(estimate: &Trajectory, reference: &Trajectory) -> Result<RpeResult, EvalError> {
    rpe_with_lengths(estimate, reference, &KITTI_SEGMENT_LENGTHS)
}

pub fn rpe_with_lengths(estimate: &Trajectory, reference: &Trajectory, lengths: &[f64]) -> Result<RpeResult, EvalError> {
    check_lengths(estimate, reference)?;
    let dist = reference.arc_lengths();
    let gt = reference.poses();
    let est = estimate.poses();

    let mut trans_ratio_sum = 0.0;
    let mut rot_sum = 0.0;
    let mut len_sum = 0.0;
    let mut segments = 0usize;
    for first in 0..gt.len() {
        for &len in lengths {
            let Some(last) = segment_end(&dist, first, len) else { continue };
            let d_gt = compose(&invert(&gt[first]), &gt[last]);
            let d_est = compose(&invert(&est[first]), &est[last]);
            let t_err = (d_gt.translation() - d_est.translation()).norm();
            let r_err = rotation_angle_between(d_est.rotation(), d_gt.rotation());
            trans_ratio_sum += t_err / len;
            rot_sum += r_err;
            len_sum += len;
            segments += 1;
        }
    }
    if segments == 0 {
        return Err(EvalError::PathTooShort { length_m: reference.path_length() });
    }
    Ok(RpeResult {
        trans_percent: 100.0 * trans_ratio_sum / segments as f64,
        rot_deg_per_m: rot_sum.to_degrees() / len_sum,
        segments,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub ate_rmse_m: f64,
    /// `None` when the reference path is shorter than every segment length.
    pub rpe_trans_percent: Option<f64>,
    pub rpe_rot_deg_per_m: Option<f64>,
    pub aligned_similarity: Similarity,
    pub n_frames: usize,
}

#[derive(Serialize)]
struct ReportJson {
    ate_rmse_m: f64,
    rpe_trans_percent: Option<f64>,
    rpe_rot_deg_per_m: Option<f64>,
    aligned_scale: f64,
    n_frames: usize,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let j = ReportJson {
            ate_rmse_m: self.ate_rmse_m,
            rpe_trans_percent: self.rpe_trans_percent,
            rpe_rot_deg_per_m: self.rpe_rot_deg_per_m,
            aligned_scale: self.aligned_similarity.scale(),
            n_frames: self.n_frames,
        };
        let mut s = serde_json::to_string_pretty(&j).expect("plain data serializes");
        s.push('\n');
        s
    }
}

/// ATE after 7-DOF alignment plus KITTI RPE.
pub fn evaluate(estimate: &Trajectory, reference: &Trajectory) -> Result<MetricsReport, EvalError> {
    check_lengths(estimate, reference)?;
    let sim = align_points(&estimate.positions(), &reference.positions(), true);
    let ate_rmse_m = ate(estimate, reference, true)?;
    let (rpe_trans_percent, rpe_rot_deg_per_m) = match rpe_kitti(estimate, reference) {
        Ok(r) => (Some(r.trans_percent), Some(r.rot_deg_per_m)),
        Err(EvalError::PathTooShort { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(MetricsReport { ate_rmse_m, rpe_trans_percent, rpe_rot_deg_per_m, aligned_similarity: sim, n_frames: estimate.len() })
}
