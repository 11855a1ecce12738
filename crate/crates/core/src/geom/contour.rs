//! Boundary tracing of binary masks at pixel-corner resolution.
//!
//! Pixel `(row, col)` covers the square `[col, col+1] x [row, row+1]`. Every
//! boundary edge between a set and an unset pixel is emitted with the object
//! on its left, then edges are chained into closed loops. Diagonal-only
//! contacts are closed first so each corner has at most one outgoing edge and
//! every traced ring is simple.

use super::polygon::{point_in_ring, signed_area, Polygon, P2};
use super::simplify::{remove_collinear, simplify_ring};
use crate::raster::Mask;

/// Douglas-Peucker tolerance applied to traced rings, in pixels.
pub const CONTOUR_SNAP_PX: f64 = 1.0;

/// One polygon per connected component, largest area first. Holes are
/// attached to the innermost enclosing outer ring.
pub fn extract_contours(mask: &Mask) -> Vec<Polygon> {
    let fixed = close_diagonals(mask);
    let loops = trace_loops(&fixed);
    let (mut outers, holes): (Vec<_>, Vec<_>) = loops
        .into_iter()
        .map(|r| remove_collinear(&r))
        .partition(|r| signed_area(r) > 0.0);
    outers.sort_by(|a, b| signed_area(b).total_cmp(&signed_area(a)));
    let mut assigned: Vec<Vec<Vec<P2>>> = vec![Vec::new(); outers.len()];
    for hole in holes {
        let probe = hole[0];
        let owner = outers
            .iter()
            .enumerate()
            .filter(|(_, o)| point_in_ring(&probe, o))
            .min_by(|a, b| signed_area(a.1).total_cmp(&signed_area(b.1)))
            .map(|(i, _)| i);
        if let Some(i) = owner {
            assigned[i].push(hole);
        }
    }
    outers
        .into_iter()
        .zip(assigned)
        .map(|(outer, mut holes)| {
            holes.sort_by(|a, b| signed_area(a).total_cmp(&signed_area(b)));
            snap(Polygon { outer, holes })
        })
        .collect()
}

// Douglas-Peucker each ring at the snap tolerance unless that breaks simplicity.
fn snap(raw: Polygon) -> Polygon {
    let simplified = Polygon {
        outer: simplify_ring(&raw.outer, CONTOUR_SNAP_PX),
        holes: raw
            .holes
            .iter()
            .map(|h| simplify_ring(h, CONTOUR_SNAP_PX))
            .collect(),
    };
    let oriented = simplified.rings().all(|r| r.len() >= 3)
        && signed_area(&simplified.outer) > 0.0
        && simplified.holes.iter().all(|h| signed_area(h) < 0.0);
    if oriented && simplified.is_simple() {
        simplified
    } else {
        raw
    }
}

/// Fill one background pixel of every 2x2 block whose set pixels touch only
/// diagonally.
fn close_diagonals(mask: &Mask) -> Mask {
    let mut m = mask.clone();
    let (w, h) = m.dims();
    loop {
        let mut changed = false;
        for r in 0..h.saturating_sub(1) {
            for c in 0..w.saturating_sub(1) {
                let a = *m.get(r, c);
                let b = *m.get(r, c + 1);
                let cc = *m.get(r + 1, c);
                let d = *m.get(r + 1, c + 1);
                if a && d && !b && !cc {
                    m.set(r, c + 1, true);
                    changed = true;
                } else if b && cc && !a && !d {
                    m.set(r, c, true);
                    changed = true;
                }
            }
        }
        if !changed {
            return m;
        }
    }
}

fn trace_loops(mask: &Mask) -> Vec<Vec<P2>> {
    let (w, h) = mask.dims();
    let vw = w + 1;
    let vid = |x: usize, y: usize| y * vw + x;
    let mut next = vec![usize::MAX; vw * (h + 1)];
    let set = |r: isize, c: isize| -> bool {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && *mask.get(r as usize, c as usize)
    };
    for r in 0..h {
        for c in 0..w {
            if !*mask.get(r, c) {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            if !set(ri - 1, ci) {
                next[vid(c, r)] = vid(c + 1, r);
            }
            if !set(ri, ci + 1) {
                next[vid(c + 1, r)] = vid(c + 1, r + 1);
            }
            if !set(ri + 1, ci) {
                next[vid(c + 1, r + 1)] = vid(c, r + 1);
            }
            if !set(ri, ci - 1) {
                next[vid(c, r + 1)] = vid(c, r);
            }
        }
    }
    let mut loops = Vec::new();
    for start in 0..next.len() {
        if next[start] == usize::MAX {
            continue;
        }
        let mut ring = Vec::new();
        let mut v = start;
        while next[v] != usize::MAX {
            ring.push(P2::new((v % vw) as f64, (v / vw) as f64));
            let n = next[v];
            next[v] = usize::MAX;
            v = n;
        }
        if ring.len() >= 4 {
            loops.push(ring);
        }
    }
    loops
}
