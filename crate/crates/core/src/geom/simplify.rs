//! Douglas-Peucker simplification for open polylines and closed rings.

use super::polygon::{point_segment_distance, Polygon, P2};

/// Douglas-Peucker on an open polyline; endpoints are always kept.
pub fn simplify_polyline(pts: &[P2], epsilon: f64) -> Vec<P2> {
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    let mut stack = vec![(0usize, pts.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        let mut best = (0.0, 0usize);
        for i in a + 1..b {
            let d = point_segment_distance(pts[i], pts[a], pts[b]);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > epsilon {
            keep[best.1] = true;
            stack.push((a, best.1));
            stack.push((best.1, b));
        }
    }
    pts.iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

/// Simplify a closed ring. The ring is split at the two endpoints of its
/// diameter (ties broken by coordinates), so the anchors survive
/// simplification and the result is idempotent at fixed `epsilon`. At least
/// three vertices survive.
pub fn simplify_ring(ring: &[P2], epsilon: f64) -> Vec<P2> {
    let n = ring.len();
    if n <= 3 {
        return ring.to_vec();
    }
    let (a, b) = diameter_anchors(ring);
    let chain1: Vec<P2> = walk(ring, a, b);
    let chain2: Vec<P2> = walk(ring, b, a);
    let s1 = simplify_polyline(&chain1, epsilon);
    let s2 = simplify_polyline(&chain2, epsilon);
    let mut out: Vec<P2> = s1[..s1.len() - 1].to_vec();
    out.extend_from_slice(&s2[..s2.len() - 1]);
    if out.len() < 3 {
        // keep the single farthest vertex from the anchor chord
        let (pa, pb) = (ring[a], ring[b]);
        let best = (0..n)
            .filter(|&i| i != a && i != b)
            .max_by(|&i, &j| {
                point_segment_distance(ring[i], pa, pb)
                    .total_cmp(&point_segment_distance(ring[j], pa, pb))
                    .then(j.cmp(&i))
            })
            .unwrap();
        let mut idx = vec![a, b, best];
        idx.sort_by_key(|&i| (i + n - a) % n);
        out = idx.into_iter().map(|i| ring[i]).collect();
    }
    out
}

fn lex(p: &P2, q: &P2) -> std::cmp::Ordering {
    p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
}

// Indices of the farthest vertex pair; among equal distances the pair whose
// sorted coordinates are lexicographically smallest wins.
fn diameter_anchors(ring: &[P2]) -> (usize, usize) {
    let hull = super::hull::hull_points(ring);
    let cand: Vec<P2> = if hull.len() >= 2 { hull } else { ring.to_vec() };
    let mut best: Option<(f64, P2, P2)> = None;
    for (i, p) in cand.iter().enumerate() {
        for q in &cand[i + 1..] {
            let (lo, hi) = if lex(p, q).is_le() { (*p, *q) } else { (*q, *p) };
            let d = (p - q).norm_squared();
            let better = match &best {
                None => true,
                Some((bd, bl, bh)) => {
                    d > *bd || (d == *bd && lex(&lo, bl).then(lex(&hi, bh)).is_lt())
                }
            };
            if better {
                best = Some((d, lo, hi));
            }
        }
    }
    let (_, lo, hi) = best.expect("ring has at least two vertices");
    let find = |t: P2| ring.iter().position(|p| *p == t).expect("hull vertex is a ring vertex");
    (find(lo), find(hi))
}

fn walk(ring: &[P2], from: usize, to: usize) -> Vec<P2> {
    let n = ring.len();
    let mut v = vec![ring[from]];
    let mut i = from;
    while i != to {
        i = (i + 1) % n;
        v.push(ring[i]);
    }
    v
}

/// Per-ring Douglas-Peucker.
pub fn simplify_polygon(poly: &Polygon, epsilon: f64) -> Polygon {
    Polygon {
        outer: simplify_ring(&poly.outer, epsilon),
        holes: poly
            .holes
            .iter()
            .map(|h| simplify_ring(h, epsilon))
            .collect(),
    }
}

/// Drop vertices that lie exactly on the line through their neighbours.
pub fn remove_collinear(ring: &[P2]) -> Vec<P2> {
    let mut pts = ring.to_vec();
    loop {
        let n = pts.len();
        if n <= 3 {
            return pts;
        }
        let before = n;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (p, c, q) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            let straight = super::polygon::cross(p, c, q) == 0.0 && (c - p).dot(&(q - c)) > 0.0;
            if !straight {
                out.push(c);
            }
        }
        pts = out;
        if pts.len() == before {
            return pts;
        }
    }
}
