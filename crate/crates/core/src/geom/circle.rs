//! Smallest enclosing circle (Welzl, iterative move-to-front form).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::polygon::P2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: P2,
    pub radius: f64,
}

impl Circle {
    fn contains(&self, p: &P2) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-12
    }

    fn from2(a: P2, b: P2) -> Circle {
        let center = nalgebra::center(&a, &b);
        Circle {
            center,
            radius: (a - center).norm().max((b - center).norm()),
        }
    }

    fn from3(a: P2, b: P2, c: P2) -> Circle {
        let (bx, by) = (b.x - a.x, b.y - a.y);
        let (cx, cy) = (c.x - a.x, c.y - a.y);
        let d = 2.0 * (bx * cy - by * cx);
        if d.abs() < 1e-12 {
            // collinear: the widest pair spans the circle
            let cands = [Circle::from2(a, b), Circle::from2(a, c), Circle::from2(b, c)];
            return cands
                .into_iter()
                .max_by(|x, y| x.radius.total_cmp(&y.radius))
                .unwrap();
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = P2::new(a.x + ux, a.y + uy);
        let radius = [a, b, c]
            .iter()
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        Circle { center, radius }
    }
}

/// Smallest circle containing every point. Empty input yields a zero circle
/// at the origin.
pub fn min_enclosing_circle(points: &[P2]) -> Circle {
    let mut pts = points.to_vec();
    if pts.is_empty() {
        return Circle {
            center: P2::origin(),
            radius: 0.0,
        };
    }
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut c = Circle {
        center: pts[0],
        radius: 0.0,
    };
    for i in 1..pts.len() {
        if c.contains(&pts[i]) {
            continue;
        }
        c = Circle {
            center: pts[i],
            radius: 0.0,
        };
        for j in 0..i {
            if c.contains(&pts[j]) {
                continue;
            }
            c = Circle::from2(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(&pts[k]) {
                    c = Circle::from3(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn two_points_diameter() {
        let c = min_enclosing_circle(&[P2::new(0.0, 0.0), P2::new(2.0, 0.0)]);
        assert!((c.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equilateral_triangle_circumradius() {
        let h = 3f64.sqrt() / 2.0;
        let c = min_enclosing_circle(&[P2::new(0.0, 0.0), P2::new(1.0, 0.0), P2::new(0.5, h)]);
        assert!((c.radius - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    }

    // Oracle: O(n^3) enumeration over vertex pairs and triples.
    fn brute(pts: &[P2]) -> f64 {
        let mut best = f64::MAX;
        let ok = |c: &Circle| pts.iter().all(|p| (p - c.center).norm() <= c.radius + 1e-9);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let c = Circle::from2(pts[i], pts[j]);
                if ok(&c) {
                    best = best.min(c.radius);
                }
                for k in j + 1..pts.len() {
                    let c = Circle::from3(pts[i], pts[j], pts[k]);
                    if ok(&c) {
                        best = best.min(c.radius);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn random_50_gons_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let pts: Vec<P2> = (0..50)
                .map(|_| P2::new(rng.random_range(-10.0..10.0), rng.random_range(-5.0..5.0)))
                .collect();
            let c = min_enclosing_circle(&pts);
            for p in &pts {
                assert!((p - c.center).norm() <= c.radius + 1e-6);
            }
            assert!((c.radius - brute(&pts)).abs() < 1e-6);
        }
    }
}
