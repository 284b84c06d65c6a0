use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ScaleError;
use crate::geometry::TrackedPoint;

/// Road plane `normal . X = height` with `normal.y > 0`. In the camera frame
/// `height` is the (unscaled) camera height above the road.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneModel {
    pub normal: Vector3<f64>,
    pub height: f64,
}

impl PlaneModel {
    pub fn signed_distance(&self, x: &Vector3<f64>) -> f64 {
        self.normal.dot(x) - self.height
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneRansacParams {
    pub iterations: usize,
    /// Inlier band half-width, in reconstruction units.
    pub dist_tol: f64,
    pub min_inliers: usize,
}

impl Default for PlaneRansacParams {
    fn default() -> Self {
        Self { iterations: 200, dist_tol: 0.02, min_inliers: 6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneFit {
    pub plane: PlaneModel,
    pub inliers: Vec<bool>,
}

impl PlaneFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

fn oriented(normal: Vector3<f64>, height: f64) -> PlaneModel {
    if normal.y < 0.0 {
        PlaneModel { normal: -normal, height: -height }
    } else {
        PlaneModel { normal, height }
    }
}

fn centroid_and_scatter(points: &[Vector3<f64>]) -> (Vector3<f64>, Matrix3<f64>) {
    let n = points.len() as f64;
    let c = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut s = Matrix3::zeros();
    for p in points {
        let d = p - c;
        s += d * d.transpose();
    }
    (c, s)
}

/// Total least-squares plane through `points`: the normal is the
/// eigenvector of the centered scatter with the smallest eigenvalue and the
/// plane passes through the centroid.
pub fn fit_plane_least_squares(points: &[Vector3<f64>]) -> Result<PlaneModel, ScaleError> {
    if points.len() < 3 {
        return Err(ScaleError::TooFewPoints { required: 3, got: points.len() });
    }
    let (c, s) = centroid_and_scatter(points);
    let eig = SymmetricEigen::new(s);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (l0, l1) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if !(l0 > 0.0) || l1 <= 1e-12 * l0 {
        return Err(ScaleError::AllCollinear);
    }
    let normal = eig.eigenvectors.column(order[2]).normalize();
    Ok(oriented(normal, normal.dot(&c)))
}

fn plane_from_three(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<PlaneModel> {
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    if !(norm >= 1e-12) {
        return None;
    }
    let n = cross / norm;
    Some(oriented(n, n.dot(a)))
}

fn inlier_mask(plane: &PlaneModel, points: &[Vector3<f64>], tol: f64) -> (Vec<bool>, usize, f64) {
    let mut count = 0;
    let mut err = 0.0;
    let mask = points
        .iter()
        .map(|p| {
            let d = plane.signed_distance(p).abs();
            let inlier = d <= tol;
            if inlier {
                count += 1;
                err += d;
            }
            inlier
        })
        .collect();
    (mask, count, err)
}

/// RANSAC over 3-point planes followed by a least-squares refit on the best
/// consensus set. Deterministic for a given `seed`.
pub fn fit_plane_ransac(points: &[TrackedPoint], seed: u64, params: &PlaneRansacParams) -> Result<PlaneFit, ScaleError> {
    let xs: Vec<Vector3<f64>> = points.iter().map(|p| p.point3d).collect();
    fit_plane_ransac_xyz(&xs, seed, params)
}

pub fn fit_plane_ransac_xyz(xs: &[Vector3<f64>], seed: u64, params: &PlaneRansacParams) -> Result<PlaneFit, ScaleError> {
    if xs.len() < 3 {
        return Err(ScaleError::TooFewPoints { required: 3, got: xs.len() });
    }
    // rejects collinear / coincident input up front
    fit_plane_least_squares(xs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(PlaneModel, usize, f64)> = None;
    for _ in 0..params.iterations {
        let idx = rand::seq::index::sample(&mut rng, xs.len(), 3);
        let Some(plane) = plane_from_three(&xs[idx.index(0)], &xs[idx.index(1)], &xs[idx.index(2)]) else {
            continue;
        };
        let (_, count, err) = inlier_mask(&plane, xs, params.dist_tol);
        let better = match best {
            None => true,
            Some((_, c, e)) => count > c || (count == c && err < e),
        };
        if better {
            best = Some((plane, count, err));
        }
    }
    let Some((hypothesis, count, _)) = best else {
        return Err(ScaleError::NoConsensus { best: 0, required: params.min_inliers });
    };
    if count < params.min_inliers.max(3) {
        return Err(ScaleError::NoConsensus { best: count, required: params.min_inliers });
    }

    let (mask, _, _) = inlier_mask(&hypothesis, xs, params.dist_tol);
    let support: Vec<Vector3<f64>> = xs.iter().zip(&mask).filter(|(_, &m)| m).map(|(x, _)| *x).collect();
    let plane = fit_plane_least_squares(&support).unwrap_or(hypothesis);
    let (inliers, count, _) = inlier_mask(&plane, xs, params.dist_tol);
    if count < params.min_inliers {
        return Err(ScaleError::NoConsensus { best: count, required: params.min_inliers });
    }
    Ok(PlaneFit { plane, inliers })
}
