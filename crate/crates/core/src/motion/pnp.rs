//! Pose refinement by Gauss-Newton on the pixel reprojection error.
//!
//! The pose maps points from frame t-1 into frame t. Rotation updates are
//! left-multiplied through the exponential map, `R <- exp(w) R`, and the
//! translation is updated additively.

use nalgebra::{DMatrix, DVector, Matrix6, Rotation3, Vector3, Vector6};

use super::MotionError;
use crate::geometry::{CameraModel, Pixel, Pose};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnpOptions {
    pub max_iterations: usize,
    /// Stop once an accepted update is shorter than this.
    pub step_tol: f64,
    /// Number of step halvings tried before giving up on an iteration.
    pub max_halvings: usize,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self { max_iterations: 50, step_tol: 1e-10, max_halvings: 30 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnpReport {
    pub pose: Pose,
    /// Sum of squared pixel residuals: initial value, then one entry per
    /// accepted iteration.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

impl PnpReport {
    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().expect("history holds the initial cost")
    }
}

fn cost(points: &[Vector3<f64>], obs: &[Pixel], cam: &CameraModel, pose: &Pose) -> f64 {
    let mut total = 0.0;
    for (x, o) in points.iter().zip(obs) {
        let y = pose.transform_point(x);
        if y.z <= 0.0 {
            return f64::INFINITY;
        }
        let du = cam.fx * y.x / y.z + cam.cx - o.u;
        let dv = cam.fy * y.y / y.z + cam.cy - o.v;
        total += du * du + dv * dv;
    }
    total
}

/// Stacked residuals `project(R X + t) - x` (2 per point, u then v) and their
/// Jacobian with respect to the update `(w, dt)`.
pub fn pnp_residuals_and_jacobian(
    points: &[Vector3<f64>],
    obs: &[Pixel],
    cam: &CameraModel,
    pose: &Pose,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = points.len();
    let mut r = DVector::zeros(2 * n);
    let mut j = DMatrix::zeros(2 * n, 6);
    for (i, (x, o)) in points.iter().zip(obs).enumerate() {
        let rx = pose.rotation() * x;
        let y = rx + pose.translation();
        let iz = 1.0 / y.z;
        r[2 * i] = cam.fx * y.x * iz + cam.cx - o.u;
        r[2 * i + 1] = cam.fy * y.y * iz + cam.cy - o.v;

        // d(pixel)/dY
        let du = Vector3::new(cam.fx * iz, 0.0, -cam.fx * y.x * iz * iz);
        let dv = Vector3::new(0.0, cam.fy * iz, -cam.fy * y.y * iz * iz);
        // dY/dw = -[R X]x, dY/dt = I  =>  row . dY/dw = (R X) x row
        let du_w = rx.cross(&du);
        let dv_w = rx.cross(&dv);
        for k in 0..3 {
            j[(2 * i, k)] = du_w[k];
            j[(2 * i + 1, k)] = dv_w[k];
            j[(2 * i, 3 + k)] = du[k];
            j[(2 * i + 1, 3 + k)] = dv[k];
        }
    }
    (r, j)
}

fn apply_update(pose: &Pose, delta: &Vector6<f64>) -> Pose {
    let w = Vector3::new(delta[0], delta[1], delta[2]);
    let dt = Vector3::new(delta[3], delta[4], delta[5]);
    let exp = Rotation3::new(w).into_inner();
    Pose::from_parts_unchecked(exp * pose.rotation(), pose.translation() + dt)
}

/// Minimizes the summed squared reprojection error of `points` (3D, frame
/// t-1) against `observations` (pixels, frame t) starting from `initial`.
///
/// The cost never increases between accepted iterations: a step that would
/// raise it is halved until it does not.
pub fn refine_pose_pnp(
    points: &[Vector3<f64>],
    observations: &[Pixel],
    cam: &CameraModel,
    initial: &Pose,
    options: &PnpOptions,
) -> Result<PnpReport, MotionError> {
    if points.len() != observations.len() {
        return Err(MotionError::LengthMismatch { points: points.len(), observations: observations.len() });
    }
    if points.len() < 4 {
        return Err(MotionError::InsufficientMatches { required: 4, got: points.len() });
    }
    if let Some(i) = points.iter().position(|x| initial.transform_point(x).z <= 0.0) {
        return Err(MotionError::PointBehindCamera(i));
    }

    let mut pose = *initial;
    let mut current = cost(points, observations, cam, &pose);
    let mut history = vec![current];
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let (r, j) = pnp_residuals_and_jacobian(points, observations, cam, &pose);
        let jtj: Matrix6<f64> = (j.transpose() * &j).fixed_view::<6, 6>(0, 0).into_owned();
        let jtr: Vector6<f64> = (j.transpose() * &r).fixed_view::<6, 1>(0, 0).into_owned();

        let eig = jtj.symmetric_eigenvalues();
        let max_eig = eig.max();
        let min_eig = eig.min();
        if !(max_eig > 0.0) || min_eig <= 1e-12 * max_eig {
            return Err(MotionError::SingularNormalEquations);
        }
        let chol = jtj.cholesky().ok_or(MotionError::SingularNormalEquations)?;
        let step = -chol.solve(&jtr);
        iterations += 1;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let candidate = apply_update(&pose, &(step * scale));
            let c = cost(points, observations, cam, &candidate);
            if c <= current {
                accepted = Some((candidate, c, step.norm() * scale));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, c, step_norm)) = accepted else { break };
        pose = next;
        current = c;
        history.push(c);
        if step_norm < options.step_tol {
            break;
        }
    }

    Ok(PnpReport { pose, cost_history: history, iterations })
}
