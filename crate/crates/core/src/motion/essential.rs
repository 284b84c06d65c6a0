//! Normalized eight-point essential matrix inside a seeded RANSAC loop, and
//! its decomposition into a relative motion by cheirality voting.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::triangulate::triangulate_point;
use super::{Correspondence, EssentialModel, MotionError, RansacParams, RelativeMotion};
use crate::geometry::{CameraModel, Pose};

const SAMPLE_SIZE: usize = 8;

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn hartley_transform(points: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let mean_dist = points.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    let s = if mean_dist > 0.0 { std::f64::consts::SQRT_2 / mean_dist } else { 1.0 };
    Matrix3::new(s, 0.0, -s * centroid.x, 0.0, s, -s * centroid.y, 0.0, 0.0, 1.0)
}

/// Projects a 3x3 matrix onto the essential manifold: singular values (1, 1, 0).
fn enforce_essential(e: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let svd = e.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut d = Matrix3::zeros();
    d[(order[0], order[0])] = 1.0;
    d[(order[1], order[1])] = 1.0;
    Some(u * d * v_t)
}

/// Eight-point (or more) solve on normalized image coordinates. `xa` are
/// points in frame t-1, `xb` in frame t; the result satisfies
/// `xb^T E xa = 0`.
fn eight_point(xa: &[Vector2<f64>], xb: &[Vector2<f64>]) -> Option<Matrix3<f64>> {
    debug_assert_eq!(xa.len(), xb.len());
    if xa.len() < SAMPLE_SIZE {
        return None;
    }
    let ta = hartley_transform(xa);
    let tb = hartley_transform(xb);

    // pad to at least 9 rows so the full right singular basis is available
    let rows = xa.len().max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (pa, pb)) in xa.iter().zip(xb).enumerate() {
        let p = ta * Vector3::new(pa.x, pa.y, 1.0);
        let q = tb * Vector3::new(pb.x, pb.y, 1.0);
        let row = [q.x * p.x, q.x * p.y, q.x, q.y * p.x, q.y * p.y, q.y, p.x, p.y, 1.0];
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let h = v_t.row(idx);
    let e_hat = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let e = tb.transpose() * e_hat * ta;
    if !e.iter().all(|x| x.is_finite()) {
        return None;
    }
    enforce_essential(&e)
}

/// First-order geometric (Sampson) distance of a pixel match to the
/// epipolar geometry of `f`, in pixels.
pub fn sampson_distance(f: &Matrix3<f64>, m: &Correspondence) -> f64 {
    let a = Vector3::new(m.a.u, m.a.v, 1.0);
    let b = Vector3::new(m.b.u, m.b.v, 1.0);
    let fa = f * a;
    let ftb = f.transpose() * b;
    let num = b.dot(&fa);
    let den = fa.x * fa.x + fa.y * fa.y + ftb.x * ftb.x + ftb.y * ftb.y;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    (num * num / den).sqrt()
}

fn fundamental_from_essential(e: &Matrix3<f64>, cam: &CameraModel) -> Matrix3<f64> {
    let k_inv = cam.k_inv();
    k_inv.transpose() * e * k_inv
}

struct Score {
    mask: Vec<bool>,
    count: usize,
    error: f64,
}

fn score(e: &Matrix3<f64>, matches: &[Correspondence], cam: &CameraModel, threshold: f64) -> Score {
    let f = fundamental_from_essential(e, cam);
    let mut mask = Vec::with_capacity(matches.len());
    let mut count = 0;
    let mut error = 0.0;
    for m in matches {
        let d = sampson_distance(&f, m);
        let inlier = d <= threshold;
        if inlier {
            count += 1;
            error += d;
        }
        mask.push(inlier);
    }
    Score { mask, count, error }
}

impl Score {
    fn better_than(&self, other: &Score) -> bool {
        self.count > other.count || (self.count == other.count && self.error < other.error)
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

/// Robust essential matrix from pixel matches. Deterministic for a given
/// `seed`.
pub fn estimate_essential(
    matches: &[Correspondence],
    cam: &CameraModel,
    seed: u64,
    params: &RansacParams,
) -> Result<EssentialModel, MotionError> {
    let n = matches.len();
    if n < SAMPLE_SIZE {
        return Err(MotionError::InsufficientMatches { required: SAMPLE_SIZE, got: n });
    }
    let disparity = median(matches.iter().map(Correspondence::disparity).collect());
    if disparity < params.min_disparity {
        return Err(MotionError::DegenerateConfiguration(format!(
            "median disparity {disparity:.3} px is below {} px",
            params.min_disparity
        )));
    }

    let xa: Vec<Vector2<f64>> = matches.iter().map(|m| cam.normalize(m.a).xy()).collect();
    let xb: Vec<Vector2<f64>> = matches.iter().map(|m| cam.normalize(m.b).xy()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Matrix3<f64>, Score)> = None;
    let mut limit = params.iterations.max(1);
    let mut iter = 0;
    let mut sa = Vec::with_capacity(SAMPLE_SIZE);
    let mut sb = Vec::with_capacity(SAMPLE_SIZE);
    while iter < limit {
        iter += 1;
        sa.clear();
        sb.clear();
        for i in rand::seq::index::sample(&mut rng, n, SAMPLE_SIZE) {
            sa.push(xa[i]);
            sb.push(xb[i]);
        }
        let Some(e) = eight_point(&sa, &sb) else { continue };
        let s = score(&e, matches, cam, params.sampson_px);
        if best.as_ref().is_none_or(|(_, b)| s.better_than(b)) {
            let ratio = s.count as f64 / n as f64;
            let p_fail = 1.0 - ratio.powi(SAMPLE_SIZE as i32);
            if p_fail <= f64::EPSILON {
                limit = iter;
            } else if p_fail < 1.0 {
                let needed = ((1.0 - params.confidence).ln() / p_fail.ln()).ceil();
                if needed.is_finite() && needed >= 0.0 {
                    limit = limit.min(needed as usize);
                }
            }
            best = Some((e, s));
        }
    }

    let Some((mut e, mut best_score)) = best else {
        return Err(MotionError::DegenerateConfiguration("no non-degenerate sample".into()));
    };
    if best_score.count < SAMPLE_SIZE {
        return Err(MotionError::DegenerateConfiguration(format!(
            "only {} inliers in the best hypothesis",
            best_score.count
        )));
    }

    let (ia, ib): (Vec<_>, Vec<_>) = best_score
        .mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| (xa[i], xb[i]))
        .unzip();
    if let Some(refit) = eight_point(&ia, &ib) {
        let s = score(&refit, matches, cam, params.sampson_px);
        if s.count >= best_score.count {
            e = refit;
            best_score = s;
        }
    }

    Ok(EssentialModel { e, inlier_mask: best_score.mask })
}

/// The four (R, t) factorizations of an essential matrix.
pub fn essential_candidates(e: &Matrix3<f64>) -> [(Matrix3<f64>, Vector3<f64>); 4] {
    let svd = e.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut v_t = svd.v_t.expect("v_t requested");
    // reorder so the null direction is the last column
    let (null_idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("three singular values");
    if null_idx != 2 {
        u.swap_columns(null_idx, 2);
        v_t.swap_rows(null_idx, 2);
    }
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v_t.determinant() < 0.0 {
        v_t = -v_t;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v_t;
    let r2 = u * w.transpose() * v_t;
    let t = u.column(2).into_owned();
    [(r1, t), (r1, -t), (r2, t), (r2, -t)]
}

/// Picks the factorization of `model.e` that places the most matches in
/// front of both cameras.
pub fn decompose_essential(
    model: &EssentialModel,
    matches: &[Correspondence],
    cam: &CameraModel,
) -> Result<RelativeMotion, MotionError> {
    if matches.is_empty() {
        return Err(MotionError::InsufficientMatches { required: 1, got: 0 });
    }
    let rays: Vec<_> = matches.iter().map(|m| (cam.normalize(m.a), cam.normalize(m.b))).collect();

    let mut counts: Vec<(usize, RelativeMotion)> = essential_candidates(&model.e)
        .into_iter()
        .map(|(r, t)| {
            let pose = Pose::from_parts_unchecked(r, t);
            let count = rays
                .iter()
                .filter(|(xa, xb)| {
                    triangulate_point(&pose, xa, xb)
                        .is_some_and(|x| x.z > 0.0 && pose.transform_point(&x).z > 0.0)
                })
                .count();
            (count, RelativeMotion { rotation: r, t_dir: t.normalize() })
        })
        .collect();
    counts.sort_by(|a, b| b.0.cmp(&a.0));
    let (best, second) = (counts[0].0, counts[1].0);
    if best == second {
        return Err(MotionError::CheiralityAmbiguous { best, second });
    }
    Ok(counts[0].1)
}
