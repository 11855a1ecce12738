//! Approximate convex decomposition of a planar polygon.
//!
//! Concavity of a ring is the largest distance from any vertex to the
//! boundary of the ring's convex hull, divided by the hull diameter. A ring
//! above the threshold is split at its deepest notch by a diagonal to another
//! visible vertex, choosing the diagonal that minimises the larger child
//! concavity. Holes are bridged into the outer ring first so the whole shape
//! is one weakly simple ring.
//!
//! The cut chosen for a ring depends only on the ring, so all thresholds share
//! one split tree. [`SplitTree`] builds it lazily and threshold sweeps reuse it.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::polygon::{cross, point_ring_distance, segments_touch, signed_area};
use crate::geom::{diameter, extract_contours, hull_points, Polygon, P2};
use crate::parts::{merge_small_groups, ConvexPart, Decomposition, Source};
use crate::raster::{Mask, Pixel};

/// Parts below this fraction of the object area are merged into their
/// largest neighbour; cuts that would create them are avoided when possible.
pub const SLIVER_FRACTION_2D: f64 = 0.005;

/// Per-vertex depth below the hull boundary (unnormalised) and the hull
/// diameter.
fn ring_depths(ring: &[P2]) -> (Vec<f64>, f64) {
    let hull = hull_points(ring);
    if hull.len() < 3 {
        return (vec![0.0; ring.len()], diameter(&hull));
    }
    let m = hull.len();
    let edges: Vec<(P2, P2, f64)> = (0..m)
        .map(|k| {
            let (a, b) = (hull[k], hull[(k + 1) % m]);
            (a, b, (b - a).norm())
        })
        .collect();
    let depths = ring
        .iter()
        .map(|&p| {
            edges
                .iter()
                .map(|&(a, b, len)| cross(a, b, p) / len)
                .fold(f64::INFINITY, f64::min)
                .max(0.0)
        })
        .collect();
    (depths, diameter(&hull))
}

/// Concavity of a single (possibly bridged) ring.
pub fn ring_concavity(ring: &[P2]) -> f64 {
    let (d, diam) = ring_depths(ring);
    if diam <= 0.0 {
        return 0.0;
    }
    d.into_iter().fold(0.0, f64::max) / diam
}

/// Largest vertex-to-hull distance over all rings divided by the diameter
/// of the outer ring's hull.
pub fn concavity_2d(poly: &Polygon) -> f64 {
    let all: Vec<P2> = poly.vertices().copied().collect();
    let hull = hull_points(&poly.outer);
    let diam = diameter(&hull);
    if hull.len() < 3 || diam <= 0.0 {
        return 0.0;
    }
    let m = hull.len();
    let deepest = all
        .iter()
        .map(|&p| {
            (0..m)
                .map(|k| {
                    let (a, b) = (hull[k], hull[(k + 1) % m]);
                    cross(a, b, p) / (b - a).norm()
                })
                .fold(f64::INFINITY, f64::min)
                .max(0.0)
        })
        .fold(0.0, f64::max);
    deepest / diam
}

/// Join every hole to the outer boundary with the shortest segment that
/// stays inside the polygon, producing one weakly simple ring.
pub fn bridge_holes(poly: &Polygon) -> Result<Vec<P2>> {
    let mut ring = poly.outer.clone();
    let mut pending: Vec<Vec<P2>> = poly.holes.clone();
    while !pending.is_empty() {
        let mut pairs: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (hi, hole) in pending.iter().enumerate() {
            for (o, p) in ring.iter().enumerate() {
                for (h, q) in hole.iter().enumerate() {
                    pairs.push(((p - q).norm_squared(), hi, o, h));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        let found = pairs
            .into_iter()
            .find(|&(_, hi, o, h)| bridge_is_clear(ring[o], pending[hi][h], &ring, &pending))
            .ok_or(Error::NonSimplePolygon)?;
        let (_, hi, o, h) = found;
        let hole = pending.remove(hi);
        let mut joined = Vec::with_capacity(ring.len() + hole.len() + 2);
        joined.extend_from_slice(&ring[..=o]);
        joined.extend_from_slice(&hole[h..]);
        joined.extend_from_slice(&hole[..=h]);
        joined.extend_from_slice(&ring[o..]);
        ring = joined;
    }
    Ok(ring)
}

fn bridge_is_clear(a: P2, b: P2, ring: &[P2], holes: &[Vec<P2>]) -> bool {
    let rings = std::iter::once(ring).chain(holes.iter().map(Vec::as_slice));
    for r in rings {
        let n = r.len();
        for k in 0..n {
            let (p, q) = (r[k], r[(k + 1) % n]);
            if !segments_touch(a, b, p, q) {
                continue;
            }
            let shares = p == a || p == b || q == a || q == b;
            if !shares || collinear_overlap(a, b, p, q) {
                return false;
            }
        }
    }
    let mid = P2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    crate::geom::polygon::point_in_ring(&mid, ring)
        && !holes
            .iter()
            .any(|h| crate::geom::polygon::point_in_ring(&mid, h))
}

fn on_closed_segment(a: P2, b: P2, p: P2) -> bool {
    cross(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

// Segments a-b and p-q share an endpoint; do they overlap beyond it?
fn collinear_overlap(a: P2, b: P2, p: P2, q: P2) -> bool {
    if (p == a && q == b) || (p == b && q == a) {
        return true;
    }
    if cross(a, b, p) != 0.0 || cross(a, b, q) != 0.0 {
        return false;
    }
    let strictly = |s: P2, t: P2, x: P2| on_closed_segment(s, t, x) && x != s && x != t;
    strictly(a, b, p) || strictly(a, b, q) || strictly(p, q, a) || strictly(p, q, b)
}

fn in_cone(ring: &[P2], i: usize, t: P2) -> bool {
    let n = ring.len();
    let a = ring[(i + n - 1) % n];
    let v = ring[i];
    let b = ring[(i + 1) % n];
    if cross(a, v, b) >= 0.0 {
        cross(v, t, a) > 0.0 && cross(t, v, b) > 0.0
    } else {
        !(cross(v, t, b) >= 0.0 && cross(t, v, a) >= 0.0)
    }
}

/// Whether the segment between vertices `i` and `j` is an interior diagonal.
fn is_diagonal(ring: &[P2], i: usize, j: usize) -> bool {
    let n = ring.len();
    let (vi, vj) = (ring[i], ring[j]);
    if vi == vj || !in_cone(ring, i, vj) || !in_cone(ring, j, vi) {
        return false;
    }
    for k in 0..n {
        let k1 = (k + 1) % n;
        if k == i || k1 == i || k == j || k1 == j {
            continue;
        }
        let (p, q) = (ring[k], ring[k1]);
        if !segments_touch(vi, vj, p, q) {
            continue;
        }
        let shares = p == vi || p == vj || q == vi || q == vj;
        if !shares || collinear_overlap(vi, vj, p, q) {
            return false;
        }
    }
    true
}

fn split_children(ring: &[P2], i: usize, j: usize) -> (Vec<P2>, Vec<P2>) {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let a = ring[i..=j].to_vec();
    let mut b = ring[j..].to_vec();
    b.extend_from_slice(&ring[..=i]);
    (a, b)
}

struct Cut {
    children: (Vec<P2>, Vec<P2>),
    concavities: (f64, f64),
}

/// Best diagonal from the deepest notch that admits one.
fn best_cut(ring: &[P2], sliver_area: f64) -> Option<Cut> {
    let n = ring.len();
    if n < 4 {
        return None;
    }
    let (depths, _) = ring_depths(ring);
    let mut notches: Vec<usize> = (0..n).filter(|&i| depths[i] > 0.0).collect();
    notches.sort_by(|&a, &b| depths[b].total_cmp(&depths[a]).then(a.cmp(&b)));
    for i in notches {
        let scored = (0..n)
            .into_par_iter()
            .filter(|&j| {
                j != i && j != (i + 1) % n && j != (i + n - 1) % n && is_diagonal(ring, i, j)
            })
            .filter_map(|j| {
                let (a, b) = split_children(ring, i, j);
                let (area_a, area_b) = (signed_area(&a), signed_area(&b));
                if area_a <= 1e-9 || area_b <= 1e-9 {
                    return None;
                }
                let (ca, cb) = (ring_concavity(&a), ring_concavity(&b));
                let sliver = area_a < sliver_area || area_b < sliver_area;
                let len = (ring[j] - ring[i]).norm();
                Some(((sliver, ca.max(cb), len, j), (a, b), (ca, cb)))
            })
            .min_by(|x, y| {
                let (kx, ky) = (&x.0, &y.0);
                kx.0.cmp(&ky.0)
                    .then(kx.1.total_cmp(&ky.1))
                    .then(kx.2.total_cmp(&ky.2))
                    .then(kx.3.cmp(&ky.3))
            });
        if let Some((_, children, concavities)) = scored {
            return Some(Cut {
                children,
                concavities,
            });
        }
    }
    None
}

struct Node {
    ring: Vec<P2>,
    concavity: f64,
    children: OnceLock<Option<Box<[Node; 2]>>>,
}

impl Node {
    fn new(ring: Vec<P2>, concavity: f64) -> Node {
        Node {
            ring,
            concavity,
            children: OnceLock::new(),
        }
    }

    fn children(&self, sliver_area: f64) -> Option<&[Node; 2]> {
        self.children
            .get_or_init(|| {
                best_cut(&self.ring, sliver_area).map(|cut| {
                    Box::new([
                        Node::new(cut.children.0, cut.concavities.0),
                        Node::new(cut.children.1, cut.concavities.1),
                    ])
                })
            })
            .as_deref()
    }

    fn leaves<'a>(&'a self, gamma: f64, sliver_area: f64, out: &mut Vec<&'a Node>) {
        if self.concavity <= gamma {
            out.push(self);
            return;
        }
        match self.children(sliver_area) {
            None => out.push(self),
            Some([a, b]) => {
                let (mut la, mut lb) = (Vec::new(), Vec::new());
                rayon::join(
                    || a.leaves(gamma, sliver_area, &mut la),
                    || b.leaves(gamma, sliver_area, &mut lb),
                );
                out.extend(la);
                out.extend(lb);
            }
        }
    }
}

/// Lazily expanded hierarchy of cuts for one polygon.
pub struct SplitTree {
    root: Node,
    sliver_area: f64,
}

impl SplitTree {
    pub fn new(poly: &Polygon) -> Result<SplitTree> {
        if !poly.is_simple() {
            return Err(Error::NonSimplePolygon);
        }
        let ring = bridge_holes(poly)?;
        let c = ring_concavity(&ring);
        Ok(SplitTree {
            root: Node::new(ring, c),
            sliver_area: SLIVER_FRACTION_2D * poly.area(),
        })
    }

    /// Leaf rings at threshold `gamma` with their concavities.
    pub fn parts(&self, gamma: f64) -> Vec<(Polygon, f64)> {
        let mut leaves = Vec::new();
        self.root.leaves(gamma, self.sliver_area, &mut leaves);
        leaves
            .into_iter()
            .map(|n| {
                (
                    Polygon {
                        outer: n.ring.clone(),
                        holes: Vec::new(),
                    },
                    n.concavity,
                )
            })
            .collect()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("threshold {gamma} outside (0, 1)")))
    }
}

/// Decompose a polygon into parts with concavity at most `gamma`.
pub fn decompose_2d(poly: &Polygon, gamma: f64) -> Result<Vec<Polygon>> {
    check_gamma(gamma)?;
    Ok(SplitTree::new(poly)?
        .parts(gamma)
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// Assign every masked pixel to exactly one part. Pixel centres inside a
/// single part go to it; centres inside several go to the nearest centroid
/// among them; uncovered centres go to the part with the nearest boundary.
pub fn rasterize_parts(parts: &[Polygon], mask: &Mask) -> Vec<Vec<Pixel>> {
    let (w, h) = mask.dims();
    let centroids: Vec<P2> = parts.iter().map(Polygon::centroid).collect();
    let mut owner: Vec<Option<(f64, usize)>> = vec![None; w * h];
    for (k, poly) in parts.iter().enumerate() {
        let (lo, hi) = poly.bbox();
        let r0 = (lo.y - 0.5).floor().max(0.0) as usize;
        let c0 = (lo.x - 0.5).floor().max(0.0) as usize;
        let r1 = ((hi.y - 0.5).ceil().max(0.0) as usize).min(h.saturating_sub(1));
        let c1 = ((hi.x - 0.5).ceil().max(0.0) as usize).min(w.saturating_sub(1));
        for r in r0..=r1 {
            for c in c0..=c1 {
                if !*mask.get(r, c) {
                    continue;
                }
                let p = P2::new(c as f64 + 0.5, r as f64 + 0.5);
                if !poly.contains(&p) {
                    continue;
                }
                let d = (p - centroids[k]).norm();
                let slot = &mut owner[r * w + c];
                if slot.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
                    *slot = Some((d, k));
                }
            }
        }
    }
    let mut groups: Vec<Vec<Pixel>> = vec![Vec::new(); parts.len()];
    for r in 0..h {
        for c in 0..w {
            if !*mask.get(r, c) {
                continue;
            }
            let k = match owner[r * w + c] {
                Some((_, k)) => k,
                None => {
                    let p = P2::new(c as f64 + 0.5, r as f64 + 0.5);
                    nearest_part(parts, &centroids, p)
                }
            };
            groups[k].push((r as u32, c as u32));
        }
    }
    groups
}

fn nearest_part(parts: &[Polygon], centroids: &[P2], p: P2) -> usize {
    let mut best = (f64::INFINITY, f64::INFINITY, 0);
    for (k, poly) in parts.iter().enumerate() {
        let d = poly
            .rings()
            .map(|r| point_ring_distance(p, r))
            .fold(f64::INFINITY, f64::min);
        let dc = (p - centroids[k]).norm();
        if (d, dc) < (best.0, best.1) {
            best = (d, dc, k);
        }
    }
    best.2
}

/// 2D decomposer for one object mask: contour, split tree and rasteriser.
pub struct Planar {
    pub object: Polygon,
    mask: Mask,
    tree: SplitTree,
}

impl Planar {
    /// `mask` should hold a single connected object; the largest contour is
    /// used when it does not.
    pub fn new(mask: &Mask) -> Result<Planar> {
        let object = extract_contours(mask)
            .into_iter()
            .next()
            .ok_or(Error::EmptyMask)?;
        let tree = SplitTree::new(&object)?;
        Ok(Planar {
            object,
            mask: mask.clone(),
            tree,
        })
    }

    pub fn polygons(&self, gamma: f64) -> Vec<Polygon> {
        self.tree.parts(gamma).into_iter().map(|(p, _)| p).collect()
    }

    /// Rasterised parts at `gamma`, slivers merged. `iterations` and
    /// `degenerate` are left for the threshold search to fill in.
    pub fn decompose(&self, gamma: f64) -> Decomposition {
        let leaves = self.tree.parts(gamma);
        let polys: Vec<Polygon> = leaves.iter().map(|(p, _)| p.clone()).collect();
        let mut groups = rasterize_parts(&polys, &self.mask);
        let members = merge_small_groups(&mut groups, self.mask.dims(), SLIVER_FRACTION_2D);
        let parts = groups
            .into_iter()
            .zip(members)
            .map(|(pixels, m)| {
                let (polygon, concavity) = leaves[m[0]].clone();
                ConvexPart {
                    centroid_px: polygon.centroid(),
                    polygon,
                    area_px: pixels.len(),
                    pixels,
                    concavity,
                    cloud: None,
                }
            })
            .collect();
        Decomposition {
            source: Source::TwoD,
            parts,
            gamma_used: gamma,
            iterations: 0,
            degenerate: false,
        }
    }
}
