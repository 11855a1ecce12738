#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapegrasp::geom::{Polygon, P2};
use shapegrasp::raster::{Mask, Raster};
use shapegrasp::scene::DepthData;
use shapegrasp::{CameraIntrinsics, SceneInput};

/// Mask of pixels whose centre satisfies `inside(x, y)`.
pub fn mask_from(w: usize, h: usize, inside: impl Fn(f64, f64) -> bool) -> Mask {
    let mut m = Mask::filled(w, h, false);
    for r in 0..h {
        for c in 0..w {
            if inside(c as f64 + 0.5, r as f64 + 0.5) {
                m.set(r, c, true);
            }
        }
    }
    m
}

/// Rectangle of full size `len x wid` centred at `(cx, cy)`, long side at
/// `angle_deg` in image coordinates.
pub fn rotated_rect(w: usize, h: usize, c: (f64, f64), len: f64, wid: f64, angle_deg: f64) -> Mask {
    let (s, co) = angle_deg.to_radians().sin_cos();
    mask_from(w, h, |x, y| {
        let (dx, dy) = (x - c.0, y - c.1);
        (dx * co + dy * s).abs() <= len / 2.0 && (-dx * s + dy * co).abs() <= wid / 2.0
    })
}

pub fn ellipse(w: usize, h: usize, c: (f64, f64), major: f64, minor: f64, angle_deg: f64) -> Mask {
    let (s, co) = angle_deg.to_radians().sin_cos();
    mask_from(w, h, |x, y| {
        let (dx, dy) = (x - c.0, y - c.1);
        let (a, b) = (dx * co + dy * s, -dx * s + dy * co);
        (a / (major / 2.0)).powi(2) + (b / (minor / 2.0)).powi(2) <= 1.0
    })
}

pub fn disk(w: usize, h: usize, c: (f64, f64), r: f64) -> Mask {
    mask_from(w, h, |x, y| (x - c.0).hypot(y - c.1) <= r)
}

/// Scene with constant depth and full confidence; principal point at the
/// image centre.
pub fn flat_scene(mask: Mask, z: f32) -> SceneInput {
    let (w, h) = mask.dims();
    let depth = DepthData {
        depth: Raster::filled(w, h, z),
        confidence: Raster::filled(w, h, 1.0),
        intrinsics: CameraIntrinsics::new(600.0, 600.0, w as f64 / 2.0, h as f64 / 2.0).unwrap(),
    };
    SceneInput::new(Raster::filled(w, h, [200, 200, 200]), mask, Some(depth)).unwrap()
}

/// Star-shaped polygon: `n` vertices at evenly spaced angles with radii in
/// `[r_min, r_max]`, centred at `c`.
pub fn star(radii: &[f64], c: (f64, f64)) -> Polygon {
    let n = radii.len();
    let pts = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            P2::new(c.0 + r * t.cos(), c.1 + r * t.sin())
        })
        .collect();
    Polygon::from_outer(pts).unwrap()
}

pub fn random_stars(count: usize, seed: u64) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(5..=14);
            let radii: Vec<f64> = (0..n).map(|_| rng.random_range(12.0..60.0)).collect();
            star(&radii, (64.0, 64.0))
        })
        .collect()
}

/// Pixels whose centre lies inside `poly`.
pub fn rasterize(poly: &Polygon, w: usize, h: usize) -> Mask {
    mask_from(w, h, |x, y| poly.contains(&P2::new(x, y)))
}

/// Deepest vertex below the convex hull, over the hull diameter. Brute
/// force: hull by gift wrapping, diameter over all hull pairs.
pub fn oracle_concavity(poly: &Polygon) -> f64 {
    let pts: Vec<P2> = poly.outer.clone();
    let hull = gift_wrap(&pts);
    let mut diam: f64 = 0.0;
    for a in &hull {
        for b in &hull {
            diam = diam.max((a - b).norm());
        }
    }
    if hull.len() < 3 || diam == 0.0 {
        return 0.0;
    }
    let m = hull.len();
    let mut deepest: f64 = 0.0;
    for p in &pts {
        let mut d = f64::INFINITY;
        for k in 0..m {
            let (a, b) = (hull[k], hull[(k + 1) % m]);
            let e = b - a;
            let q = p - a;
            // inward distance for a counter-clockwise hull
            d = d.min((e.x * q.y - e.y * q.x) / e.norm());
        }
        deepest = deepest.max(d.max(0.0));
    }
    deepest / diam
}

fn gift_wrap(pts: &[P2]) -> Vec<P2> {
    let start = (0..pts.len())
        .min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x).then(pts[a].y.total_cmp(&pts[b].y)))
        .unwrap();
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = (cur + 1) % pts.len();
        for j in 0..pts.len() {
            let (o, a, b) = (pts[cur], pts[next], pts[j]);
            let cr = (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
            let farther = (b - o).norm() > (a - o).norm();
            if cr < -1e-12 || (cr.abs() <= 1e-12 && farther) {
                next = j;
            }
        }
        if next == start || hull.len() > pts.len() {
            break;
        }
        hull.push(next);
        cur = next;
    }
    // counter-clockwise in a y-up frame
    let mut h: Vec<P2> = hull.into_iter().map(|i| pts[i]).collect();
    let area: f64 = (0..h.len())
        .map(|k| {
            let (a, b) = (h[k], h[(k + 1) % h.len()]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    if area < 0.0 {
        h.reverse();
    }
    h
}
