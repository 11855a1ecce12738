//! Planar convex hull (Andrew's monotone chain).

use super::polygon::{cross, Polygon, P2};
use crate::error::{Error, Result};

/// Hull vertices with positive orientation, collinear points dropped,
/// starting from the lexicographically smallest point.
///
/// Returns fewer than three points when the input is collinear or has
/// fewer than three distinct points.
pub fn hull_points(points: &[P2]) -> Vec<P2> {
    let mut pts: Vec<P2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Convex hull as a polygon. Fails on fewer than three non-collinear points.
pub fn convex_hull(points: &[P2]) -> Result<Polygon> {
    let h = hull_points(points);
    if h.len() < 3 {
        return Err(Error::DegenerateGeometry(
            "convex hull needs three non-collinear points".into(),
        ));
    }
    Ok(Polygon {
        outer: h,
        holes: Vec::new(),
    })
}

/// Largest pairwise distance among hull vertices.
pub fn diameter(hull: &[P2]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max((hull[i] - hull[j]).norm_squared());
        }
    }
    best.sqrt()
}
