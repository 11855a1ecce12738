use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type P2 = Point2<f64>;

/// Polygon with one outer ring and optional holes.
///
/// Rings are stored open (first vertex not repeated). The outer ring has a
/// positive shoelace area in the coordinates as given, holes a negative one,
/// so the interior is always to the left of each directed edge. In image
/// coordinates (y pointing down) the outer ring therefore appears clockwise
/// on screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub outer: Vec<P2>,
    pub holes: Vec<Vec<P2>>,
}

impl Polygon {
    /// Build a polygon, normalising ring orientation. Rings with fewer than
    /// three vertices or zero area are rejected.
    pub fn new(outer: Vec<P2>, holes: Vec<Vec<P2>>) -> Result<Self> {
        let outer = orient(outer, true)?;
        let holes = holes
            .into_iter()
            .map(|h| orient(h, false))
            .collect::<Result<Vec<_>>>()?;
        Ok(Polygon { outer, holes })
    }

    pub fn from_outer(outer: Vec<P2>) -> Result<Self> {
        Polygon::new(outer, Vec::new())
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<P2>> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &P2> {
        self.rings().flatten()
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(Vec::len).sum()
    }

    /// Enclosed area (outer minus holes).
    pub fn area(&self) -> f64 {
        self.rings().map(|r| signed_area(r)).sum::<f64>()
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> P2 {
        let mut a = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for ring in self.rings() {
            let (ra, c) = ring_moments(ring);
            a += ra;
            cx += c.x;
            cy += c.y;
        }
        if a.abs() < 1e-12 {
            return vertex_mean(&self.outer);
        }
        P2::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    pub fn perimeter(&self) -> f64 {
        self.rings().map(|r| ring_perimeter(r)).sum()
    }

    /// Even-odd containment over all rings.
    pub fn contains(&self, p: &P2) -> bool {
        self.rings().filter(|r| point_in_ring(p, r)).count() % 2 == 1
    }

    pub fn bbox(&self) -> (P2, P2) {
        bbox(self.outer.iter())
    }

    pub fn translated(&self, d: Vector2<f64>) -> Polygon {
        self.map_points(|p| p + d)
    }

    pub fn scaled(&self, s: f64) -> Polygon {
        self.map_points(|p| P2::from(p.coords * s))
    }

    pub fn map_points(&self, f: impl Fn(&P2) -> P2) -> Polygon {
        Polygon {
            outer: self.outer.iter().map(&f).collect(),
            holes: self
                .holes
                .iter()
                .map(|h| h.iter().map(&f).collect())
                .collect(),
        }
    }

    /// True when no two edges of any rings cross or touch except consecutive
    /// edges at their shared vertex.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<(usize, usize, P2, P2)> = self
            .rings()
            .enumerate()
            .flat_map(|(ri, ring)| {
                let n = ring.len();
                (0..n).map(move |i| (ri, i, ring[i], ring[(i + 1) % n]))
            })
            .collect();
        let ring_len: Vec<usize> = self.rings().map(Vec::len).collect();
        for a in 0..edges.len() {
            for b in a + 1..edges.len() {
                let (ra, ia, a0, a1) = edges[a];
                let (rb, ib, b0, b1) = edges[b];
                if ra == rb {
                    let n = ring_len[ra];
                    let adjacent = (ia + 1) % n == ib || (ib + 1) % n == ia;
                    if adjacent {
                        // consecutive edges may only share their common vertex
                        if n == 3 {
                            continue;
                        }
                        let (shared, other_a, other_b) = if (ia + 1) % n == ib {
                            (a1, a0, b1)
                        } else {
                            (a0, a1, b0)
                        };
                        if collinear_overlap(shared, other_a, other_b) {
                            return false;
                        }
                        continue;
                    }
                }
                if segments_touch(a0, a1, b0, b1) {
                    return false;
                }
            }
        }
        true
    }
}

fn orient(mut ring: Vec<P2>, positive: bool) -> Result<Vec<P2>> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "ring has {} vertices",
            ring.len()
        )));
    }
    let a = signed_area(&ring);
    if a == 0.0 {
        return Err(Error::DegenerateGeometry("ring has zero area".into()));
    }
    if (a > 0.0) != positive {
        ring.reverse();
    }
    Ok(ring)
}

/// Shoelace signed area of an open ring.
pub fn signed_area(ring: &[P2]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

// Returns (signed area, unnormalised centroid sums).
fn ring_moments(ring: &[P2]) -> (f64, P2) {
    let n = ring.len();
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let cr = p.x * q.y - q.x * p.y;
        a += cr;
        cx += (p.x + q.x) * cr;
        cy += (p.y + q.y) * cr;
    }
    (0.5 * a, P2::new(0.5 * cx, 0.5 * cy))
}

pub fn ring_centroid(ring: &[P2]) -> P2 {
    let (a, c) = ring_moments(ring);
    if a.abs() < 1e-12 {
        return vertex_mean(ring);
    }
    P2::new(c.x / (3.0 * a), c.y / (3.0 * a))
}

pub fn vertex_mean(pts: &[P2]) -> P2 {
    let n = pts.len().max(1) as f64;
    let s = pts.iter().fold(Vector2::zeros(), |acc, p| acc + p.coords);
    P2::from(s / n)
}

pub fn ring_perimeter(ring: &[P2]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| (ring[(i + 1) % n] - ring[i]).norm()).sum()
}

pub fn bbox<'a>(pts: impl Iterator<Item = &'a P2>) -> (P2, P2) {
    let mut lo = P2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Twice the signed area of triangle (a, b, c); positive when c is left of a->b.
#[inline]
pub fn cross(a: P2, b: P2, c: P2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the closed boundary of `ring`.
pub fn point_ring_distance(p: P2, ring: &[P2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| point_segment_distance(p, ring[i], ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Crossing-number containment test for an open ring.
pub fn point_in_ring(p: &P2, ring: &[P2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[inline]
fn on_segment(a: P2, b: P2, p: P2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_touch(a0: P2, a1: P2, b0: P2, b1: P2) -> bool {
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(b0, b1, a0))
        || (d2 == 0.0 && on_segment(b0, b1, a1))
        || (d3 == 0.0 && on_segment(a0, a1, b0))
        || (d4 == 0.0 && on_segment(a0, a1, b1))
}

/// Proper crossing: interiors intersect in exactly one point, no endpoint involved.
pub fn segments_cross_properly(a0: P2, a1: P2, b0: P2, b1: P2) -> bool {
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

// Two consecutive edges (shared->a) and (shared->b) fold back over each other.
fn collinear_overlap(shared: P2, a: P2, b: P2) -> bool {
    cross(shared, a, b) == 0.0 && (a - shared).dot(&(b - shared)) > 0.0
}
