//! Depth-consistency voting over Delaunay triangles.
//!
//! For two ground points, a lower image row means a smaller depth, so
//! `(v_i - v_j)(d_i - d_j) <= 0`. Every vertex pair of every triangle casts
//! one vote on both endpoints: +1 when the pair is consistent, -1 otherwise.

use super::delaunay::Triangle;
use crate::geometry::TrackedPoint;

/// `(v_p - v_q) * (d_p - d_q)` with `d` the depth of the triangulated point.
pub fn depth_consistency_sigma(p: &TrackedPoint, q: &TrackedPoint) -> f64 {
    (p.pixel.v - q.pixel.v) * (p.depth() - q.depth())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VoteLedger {
    pub votes: Vec<i64>,
    /// Number of pair occurrences each point took part in.
    pub participation: Vec<u32>,
}

pub fn cast_votes(points: &[TrackedPoint], triangles: &[Triangle]) -> VoteLedger {
    let mut ledger = VoteLedger { votes: vec![0; points.len()], participation: vec![0; points.len()] };
    for tri in triangles {
        for (i, j) in tri.edges() {
            let delta = if depth_consistency_sigma(&points[i], &points[j]) <= 0.0 { 1 } else { -1 };
            ledger.votes[i] += delta;
            ledger.votes[j] += delta;
            ledger.participation[i] += 1;
            ledger.participation[j] += 1;
        }
    }
    ledger
}

/// Indices (ascending) of the points whose net vote reaches `beta_a`.
pub fn vote_select(points: &[TrackedPoint], triangles: &[Triangle], beta_a: i64) -> Vec<usize> {
    let ledger = cast_votes(points, triangles);
    ledger
        .votes
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v >= beta_a).then_some(i))
        .collect()
}
