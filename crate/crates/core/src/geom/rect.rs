//! Minimum-area enclosing rectangle by rotating calipers.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::hull::hull_points;
use super::polygon::P2;
use crate::error::{Error, Result};

/// Oriented rectangle. `angle_deg` is the direction of the long side,
/// measured from +x towards +y, in `[0, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub center: P2,
    pub long: f64,
    pub short: f64,
    pub angle_deg: f64,
}

impl RotatedRect {
    pub fn area(&self) -> f64 {
        self.long * self.short
    }

    /// Unit vectors along the long and short sides.
    pub fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let t = self.angle_deg.to_radians();
        let u = Vector2::new(t.cos(), t.sin());
        (u, Vector2::new(-u.y, u.x))
    }

    pub fn corners(&self) -> [P2; 4] {
        let (u, v) = self.axes();
        let (a, b) = (u * self.long / 2.0, v * self.short / 2.0);
        let c = self.center;
        [c - a - b, c + a - b, c + a + b, c - a + b]
    }
}

/// Normalise an angle in degrees to `[0, 180)`.
pub fn angle_mod_180(deg: f64) -> f64 {
    let a = deg.rem_euclid(180.0);
    if a >= 180.0 - 1e-9 {
        0.0
    } else {
        a
    }
}

pub fn min_area_rect(points: &[P2]) -> Result<RotatedRect> {
    let h = hull_points(points);
    if h.len() < 3 {
        return Err(Error::DegenerateGeometry(
            "minimum-area rectangle of collinear points".into(),
        ));
    }
    let n = h.len();
    let next = |i: usize| (i + 1) % n;
    let (mut right, mut top, mut left) = (0usize, 0usize, 0usize);
    let mut best: Option<(f64, RotatedRect)> = None;
    for i in 0..n {
        let origin = h[i];
        let u = (h[next(i)] - origin).normalize();
        let nrm = Vector2::new(-u.y, u.x);
        let along = |p: P2| (p - origin).dot(&u);
        let up = |p: P2| (p - origin).dot(&nrm);
        if i == 0 {
            right = 0;
        }
        let mut guard = 0;
        while along(h[next(right)]) > along(h[right]) + 1e-12 && guard < n {
            right = next(right);
            guard += 1;
        }
        if i == 0 {
            top = right;
        }
        guard = 0;
        while up(h[next(top)]) > up(h[top]) + 1e-12 && guard < n {
            top = next(top);
            guard += 1;
        }
        if i == 0 {
            left = top;
        }
        guard = 0;
        while along(h[next(left)]) < along(h[left]) - 1e-12 && guard < n {
            left = next(left);
            guard += 1;
        }
        let (lo, hi) = (along(h[left]), along(h[right]));
        let height = up(h[top]);
        let width = hi - lo;
        let area = width * height;
        let center = origin + u * ((lo + hi) / 2.0) + nrm * (height / 2.0);
        let (long, short, dir) = if width >= height {
            (width, height, u)
        } else {
            (height, width, nrm)
        };
        let rect = RotatedRect {
            center,
            long,
            short,
            angle_deg: angle_mod_180(dir.y.atan2(dir.x).to_degrees()),
        };
        if best.as_ref().is_none_or(|(a, _)| area < *a - 1e-9) {
            best = Some((area, rect));
        }
    }
    Ok(best.expect("hull has edges").1)
}
