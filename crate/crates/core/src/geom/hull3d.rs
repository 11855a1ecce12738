//! Incremental 3D convex hull with exact integer predicates.
//!
//! Voxel centres live on an integer lattice, so orientation tests are exact
//! and coplanar configurations are resolved consistently. Floating-point
//! inputs are quantised onto a fine lattice first.

use std::collections::HashSet;

use nalgebra::Point3;

use crate::error::{Error, Result};

pub type I3 = [i64; 3];

/// Triangle with an outward integer normal; `normal . p <= offset` for every
/// point of the hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub v: [usize; 3],
    pub normal: [i128; 3],
    pub offset: i128,
}

/// Hull over lattice points. `vertices` indexes into the input slice.
#[derive(Debug, Clone)]
pub struct IntHull {
    pub points: Vec<I3>,
    pub vertices: Vec<usize>,
    pub faces: Vec<Face>,
}

fn sub(a: I3, b: I3) -> [i128; 3] {
    [
        (a[0] - b[0]) as i128,
        (a[1] - b[1]) as i128,
        (a[2] - b[2]) as i128,
    ]
}

fn cross(a: [i128; 3], b: [i128; 3]) -> [i128; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [i128; 3], b: [i128; 3]) -> i128 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn widen(p: I3) -> [i128; 3] {
    [p[0] as i128, p[1] as i128, p[2] as i128]
}

fn make_face(pts: &[I3], v: [usize; 3]) -> Face {
    let normal = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
    Face {
        v,
        normal,
        offset: dot(normal, widen(pts[v[0]])),
    }
}

impl Face {
    /// Positive when `p` is strictly outside this face's plane.
    pub fn side(&self, p: I3) -> i128 {
        dot(self.normal, widen(p)) - self.offset
    }

    /// Signed Euclidean distance of a real point to the face plane
    /// (positive outside).
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        let n = self.normal.map(|x| x as f64);
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        (n[0] * p[0] + n[1] * p[1] + n[2] * p[2] - self.offset as f64) / len
    }
}

impl IntHull {
    pub fn contains(&self, p: I3) -> bool {
        self.faces.iter().all(|f| f.side(p) <= 0)
    }

    /// Largest distance between two hull vertices, in lattice units.
    pub fn diameter(&self) -> f64 {
        let mut best = 0i128;
        for (i, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[i + 1..] {
                let d = sub(self.points[a], self.points[b]);
                best = best.max(dot(d, d));
            }
        }
        (best as f64).sqrt()
    }
}

/// Exact hull of lattice points. Returns `None` when all points are coplanar.
pub fn int_convex_hull(points: &[I3]) -> Option<IntHull> {
    let pts: Vec<I3> = points.to_vec();
    let n = pts.len();
    if n < 4 {
        return None;
    }
    // initial simplex: extreme-x pair, farthest from their line, farthest from that plane
    let i0 = (0..n).min_by_key(|&i| (pts[i], i))?;
    let i1 = (0..n).max_by_key(|&i| (pts[i], std::cmp::Reverse(i)))?;
    if pts[i0] == pts[i1] {
        return None;
    }
    let d01 = sub(pts[i1], pts[i0]);
    let i2 = (0..n).max_by_key(|&i| {
        let c = cross(d01, sub(pts[i], pts[i0]));
        dot(c, c)
    })?;
    let nrm = cross(d01, sub(pts[i2], pts[i0]));
    if nrm == [0, 0, 0] {
        return None;
    }
    let i3 = (0..n).max_by_key(|&i| dot(nrm, sub(pts[i], pts[i0])).abs())?;
    let vol = dot(nrm, sub(pts[i3], pts[i0]));
    if vol == 0 {
        return None;
    }
    let mut faces: Vec<Face> = if vol < 0 {
        vec![
            make_face(&pts, [i0, i1, i2]),
            make_face(&pts, [i0, i3, i1]),
            make_face(&pts, [i1, i3, i2]),
            make_face(&pts, [i2, i3, i0]),
        ]
    } else {
        vec![
            make_face(&pts, [i0, i2, i1]),
            make_face(&pts, [i0, i1, i3]),
            make_face(&pts, [i1, i2, i3]),
            make_face(&pts, [i2, i0, i3]),
        ]
    };
    let seed = [i0, i1, i2, i3];
    // visit farther points first so the hull grows quickly
    let centre = seed
        .iter()
        .fold([0i128; 3], |acc, &i| {
            let p = widen(pts[i]);
            [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]
        });
    let mut order: Vec<usize> = (0..n).filter(|i| !seed.contains(i)).collect();
    order.sort_by_key(|&i| {
        let p = widen(pts[i]);
        let d = [4 * p[0] - centre[0], 4 * p[1] - centre[1], 4 * p[2] - centre[2]];
        (std::cmp::Reverse(dot(d, d)), i)
    });
    for &pi in &order {
        let p = pts[pi];
        let visible: Vec<bool> = faces.iter().map(|f| f.side(p) > 0).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                edges.insert((f.v[k], f.v[(k + 1) % 3]));
            }
        }
        let horizon: Vec<(usize, usize)> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| v)
            .flat_map(|(f, _)| (0..3).map(move |k| (f.v[k], f.v[(k + 1) % 3])))
            .filter(|&(a, b)| !edges.contains(&(b, a)))
            .collect();
        let mut kept: Vec<Face> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| *f)
            .collect();
        for (a, b) in horizon {
            kept.push(make_face(&pts, [a, b, pi]));
        }
        faces = kept;
    }
    let mut vertices: Vec<usize> = faces.iter().flat_map(|f| f.v).collect();
    vertices.sort_unstable();
    vertices.dedup();
    Some(IntHull {
        points: pts,
        vertices,
        faces,
    })
}

/// Hull of real-valued points: vertex indices into `points` plus triangles.
#[derive(Debug, Clone)]
pub struct Hull3 {
    pub vertices: Vec<usize>,
    pub faces: Vec<[usize; 3]>,
}

/// Convex hull of 3D points, quantised to 2^16 steps across the bounding box.
pub fn convex_hull_3d(points: &[Point3<f64>]) -> Result<Hull3> {
    if points.len() < 4 {
        return Err(Error::DegenerateGeometry("3D hull needs four points".into()));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    if span <= 0.0 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let scale = 65536.0 / span;
    let q: Vec<I3> = points
        .iter()
        .map(|p| [0, 1, 2].map(|k| ((p[k] - lo[k]) * scale).round() as i64))
        .collect();
    let h = int_convex_hull(&q)
        .ok_or_else(|| Error::DegenerateGeometry("points are coplanar".into()))?;
    Ok(Hull3 {
        vertices: h.vertices,
        faces: h.faces.iter().map(|f| f.v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_lattice_hull() {
        let mut pts = Vec::new();
        for x in 0..5 {
            for y in 0..4 {
                for z in 0..3 {
                    pts.push([x, y, z]);
                }
            }
        }
        let h = int_convex_hull(&pts).unwrap();
        let mut corners: Vec<I3> = h.vertices.iter().map(|&i| pts[i]).collect();
        corners.sort();
        // coplanar face points may survive as vertices; the 8 corners must be there
        for c in [[0, 0, 0], [4, 3, 2], [0, 3, 0], [4, 0, 2]] {
            assert!(corners.contains(&c));
        }
        for p in &pts {
            assert!(h.contains(*p));
        }
        assert!(!h.contains([5, 0, 0]));
        assert!((h.diameter() - (16.0f64 + 9.0 + 4.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn coplanar_is_none() {
        let pts: Vec<I3> = (0..10).map(|i| [i, i * 2 % 7, 0]).collect();
        assert!(int_convex_hull(&pts).is_none());
    }

    #[test]
    fn float_hull_of_tetrahedron_plus_interior() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.1, 0.1, 0.1),
        ];
        let h = convex_hull_3d(&pts).unwrap();
        assert_eq!(h.vertices, vec![0, 1, 2, 3]);
        assert_eq!(h.faces.len(), 4);
    }

    #[test]
    fn every_face_bounds_all_points() {
        let mut pts = Vec::new();
        let mut s = 17u64;
        for _ in 0..300 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (s >> 33) as i64 % 40 - 20;
            let y = (s >> 20) as i64 % 30 - 15;
            let z = (s >> 45) as i64 % 10;
            pts.push([x, y, z]);
        }
        let h = int_convex_hull(&pts).unwrap();
        for p in &pts {
            assert!(h.contains(*p));
        }
        // Euler characteristic of a closed triangulated sphere: F = 2V - 4
        let used: HashSet<usize> = h.faces.iter().flat_map(|f| f.v).collect();
        assert_eq!(h.faces.len(), 2 * used.len() - 4);
    }
}
