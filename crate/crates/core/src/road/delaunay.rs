//! Bowyer-Watson Delaunay triangulation over image pixels.
//!
//! Orientation and in-circle tests use adaptive exact predicates. The
//! enclosing triangle is scaled far beyond the input extent and removed at
//! the end together with every triangle touching it.

use robust::{incircle, orient2d, Coord};

use super::RoadError;
use crate::geometry::Pixel;

/// Pixels closer than this are treated as the same site.
pub const DEDUP_TOL_PX: f64 = 1e-6;

const SUPER_SCALE: f64 = 1e4;

/// A triangle as indices into the input point list, counter-clockwise in
/// (u, v).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triangle {
    pub indices: [usize; 3],
}

impl Triangle {
    /// The three vertex pairs (i, j), (j, k), (k, i).
    pub fn edges(&self) -> [(usize, usize); 3] {
        let [i, j, k] = self.indices;
        [(i, j), (j, k), (k, i)]
    }
}

fn coord(p: Pixel) -> Coord<f64> {
    Coord { x: p.u, y: p.v }
}

/// Removes near-duplicate pixels, keeping the first occurrence. Returns
/// the original indices of the surviving sites.
fn dedup(points: &[Pixel]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].u.total_cmp(&points[b].u).then(a.cmp(&b)));
    let mut dropped = vec![false; points.len()];
    for (pos, &i) in order.iter().enumerate() {
        if dropped[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if points[j].u - points[i].u > DEDUP_TOL_PX {
                break;
            }
            if !dropped[j] && points[i].distance(&points[j]) <= DEDUP_TOL_PX {
                // i precedes j in u; keep whichever came first in the input
                if j > i {
                    dropped[j] = true;
                } else {
                    dropped[i] = true;
                    break;
                }
            }
        }
    }
    (0..points.len()).filter(|&i| !dropped[i] && points[i].is_finite()).collect()
}

/// Delaunay triangulation of `points`. Triangle indices refer to the input
/// slice; duplicates (within [`DEDUP_TOL_PX`]) are represented by their
/// first occurrence.
pub fn delaunay(points: &[Pixel]) -> Result<Vec<Triangle>, RoadError> {
    let sites = dedup(points);
    if sites.len() < 3 {
        return Err(RoadError::TooFewPoints { required: 3, got: sites.len() });
    }
    let p0 = coord(points[sites[0]]);
    let p1 = coord(points[sites[1]]);
    if sites[2..].iter().all(|&i| orient2d(p0, p1, coord(points[i])) == 0.0) {
        return Err(RoadError::AllCollinear);
    }

    let (mut min_u, mut min_v, mut max_u, mut max_v) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &i in &sites {
        min_u = min_u.min(points[i].u);
        max_u = max_u.max(points[i].u);
        min_v = min_v.min(points[i].v);
        max_v = max_v.max(points[i].v);
    }
    let span = (max_u - min_u).max(max_v - min_v).max(1.0) * SUPER_SCALE;
    let (cu, cv) = (0.5 * (min_u + max_u), 0.5 * (min_v + max_v));

    // working vertex list: sites followed by the three enclosing vertices
    let mut verts: Vec<Pixel> = sites.iter().map(|&i| points[i]).collect();
    let n = verts.len();
    verts.push(Pixel::new(cu - span, cv - span));
    verts.push(Pixel::new(cu + span, cv - span));
    verts.push(Pixel::new(cu, cv + span));

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    debug_assert!(orient2d(coord(verts[n]), coord(verts[n + 1]), coord(verts[n + 2])) > 0.0);

    let mut bad = Vec::new();
    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for p in 0..n {
        let pc = coord(verts[p]);
        bad.clear();
        for (t, tri) in tris.iter().enumerate() {
            let [a, b, c] = *tri;
            if incircle(coord(verts[a]), coord(verts[b]), coord(verts[c]), pc) > 0.0 {
                bad.push(t);
            }
        }
        boundary.clear();
        for &t in &bad {
            let [a, b, c] = tris[t];
            for (e0, e1) in [(a, b), (b, c), (c, a)] {
                // an edge is on the cavity boundary when its twin is not in a bad triangle
                let shared = bad.iter().any(|&o| {
                    o != t && {
                        let [x, y, z] = tris[o];
                        (x, y) == (e1, e0) || (y, z) == (e1, e0) || (z, x) == (e1, e0)
                    }
                });
                if !shared {
                    boundary.push((e0, e1));
                }
            }
        }
        for &t in bad.iter().rev() {
            tris.swap_remove(t);
        }
        for &(e0, e1) in &boundary {
            tris.push([e0, e1, p]);
        }
    }

    let mut out: Vec<Triangle> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .map(|[a, b, c]| Triangle { indices: [sites[a], sites[b], sites[c]] })
        .collect();
    out.sort();
    Ok(out)
}
