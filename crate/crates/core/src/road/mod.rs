//! Road-surface point selection: semantic mask filtering, depth-consistency
//! voting over a Delaunay mesh, then pitch consistency with the road model.

pub mod delaunay;
mod mask;
mod road_model;
mod votes;

pub use delaunay::{delaunay, Triangle};
pub use mask::{filter_dynamic, filter_dynamic_matches, filter_road, road_indices, LabelMask};
pub use road_model::{motion_pitch, pitch_residual, road_model_select, triangle_plane, TrianglePlane};
pub use votes::{cast_votes, depth_consistency_sigma, vote_select, VoteLedger};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RoadError {
    #[error("need at least {required} distinct points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("all points are collinear")]
    AllCollinear,
    #[error("triangle {0:?} is degenerate in 3D")]
    DegenerateTriangle([usize; 3]),
    #[error("motion vector is zero; road pitch is undefined")]
    ZeroMotion,
    #[error("label buffer holds {got} bytes, expected {expected}")]
    MaskSize { expected: usize, got: usize },
}

/// Selects road points from triangulated features: road-mask lookup,
/// depth-consistency voting (`beta_a`) and pitch gating (`theta0`, radians)
/// against the travel direction `t_dir`. Returns ascending indices into
/// `points`; an empty result is not an error.
pub fn select_road_points(
    points: &[crate::geometry::TrackedPoint],
    mask: &LabelMask,
    t_dir: &nalgebra::Vector3<f64>,
    beta_a: i64,
    theta0: f64,
) -> Vec<usize> {
    let on_road = road_indices(points, mask);
    let candidates: Vec<_> = on_road.iter().map(|&i| points[i]).collect();
    let pixels: Vec<_> = candidates.iter().map(|p| p.pixel).collect();
    let Ok(triangles) = delaunay(&pixels) else { return Vec::new() };
    let voted = vote_select(&candidates, &triangles, beta_a);

    let voted_points: Vec<_> = voted.iter().map(|&i| candidates[i]).collect();
    match road_model_select(&voted_points, t_dir, theta0) {
        Ok(kept) => kept.into_iter().map(|k| on_road[voted[k]]).collect(),
        Err(_) => Vec::new(),
    }
}
