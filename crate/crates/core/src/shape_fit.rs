//! Primitive fitting and per-part attributes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::polygon::{point_ring_distance, ring_perimeter, signed_area};
use crate::geom::{
    angle_mod_180, hull_points, min_area_rect, min_enclosing_circle, simplify_ring, Polygon, P2,
};
use crate::parts::ConvexPart;
use crate::raster::{Pixel, Raster};

/// Shape factor at or above which a part is a circle.
pub const CIRCLE_SHAPE_FACTOR: f64 = 0.9;
/// Default simplification tolerance, percent of the part's hull perimeter.
pub const DEFAULT_EPSILON_PCT: f64 = 2.0;

pub const PALETTE: [(&str, [u8; 3]); 16] = [
    ("white", [255, 255, 255]),
    ("silver", [192, 192, 192]),
    ("gray", [128, 128, 128]),
    ("black", [0, 0, 0]),
    ("red", [255, 0, 0]),
    ("maroon", [128, 0, 0]),
    ("yellow", [255, 255, 0]),
    ("olive", [128, 128, 0]),
    ("lime", [0, 255, 0]),
    ("green", [0, 128, 0]),
    ("aqua", [0, 255, 255]),
    ("teal", [0, 128, 128]),
    ("blue", [0, 0, 255]),
    ("navy", [0, 0, 128]),
    ("fuchsia", [255, 0, 255]),
    ("purple", [128, 0, 128]),
];

pub fn palette_rgb(name: &str) -> Option<[u8; 3]> {
    PALETTE.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

/// Nearest palette entry by Euclidean RGB distance; equal distances go to
/// the alphabetically first name.
pub fn nearest_color(rgb: [u8; 3]) -> &'static str {
    PALETTE
        .iter()
        .map(|(name, c)| {
            let d: i32 = (0..3).map(|k| (rgb[k] as i32 - c[k] as i32).pow(2)).sum();
            (d, *name)
        })
        .min()
        .map(|(_, n)| n)
        .expect("palette is non-empty")
}

/// Most frequent palette label over the pixels; ties go to the
/// alphabetically first name.
pub fn dominant_color(pixels: &[Pixel], rgb: &Raster<[u8; 3]>) -> &'static str {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for &(r, c) in pixels {
        *counts.entry(nearest_color(*rgb.get(r as usize, c as usize))).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(n, _)| n)
        .unwrap_or("black")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapePrimitive {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Rectangle {
        center: [f64; 2],
        long: f64,
        short: f64,
        angle_deg: f64,
    },
    IsoscelesTriangle {
        apex: [f64; 2],
        base_midpoint: [f64; 2],
        leg_length: f64,
        base_length: f64,
    },
    /// Full axis lengths.
    Ellipse {
        center: [f64; 2],
        major: f64,
        minor: f64,
        angle_deg: f64,
    },
}

fn p2(a: [f64; 2]) -> P2 {
    P2::new(a[0], a[1])
}

fn arr(p: P2) -> [f64; 2] {
    [p.x, p.y]
}

impl ShapePrimitive {
    pub fn kind(&self) -> &'static str {
        match self {
            ShapePrimitive::Circle { .. } => "circle",
            ShapePrimitive::Rectangle { .. } => "rectangle",
            ShapePrimitive::IsoscelesTriangle { .. } => "isosceles_triangle",
            ShapePrimitive::Ellipse { .. } => "ellipse",
        }
    }

    /// (long, short) extent.
    pub fn extents(&self) -> (f64, f64) {
        match *self {
            ShapePrimitive::Circle { radius, .. } => (2.0 * radius, 2.0 * radius),
            ShapePrimitive::Rectangle { long, short, .. } => (long, short),
            ShapePrimitive::Ellipse { major, minor, .. } => (major, minor),
            ShapePrimitive::IsoscelesTriangle {
                apex,
                base_midpoint,
                base_length,
                ..
            } => {
                let h = (p2(apex) - p2(base_midpoint)).norm();
                (base_length.max(h), base_length.min(h))
            }
        }
    }

    pub fn aspect_ratio(&self) -> f64 {
        let (l, s) = self.extents();
        if s <= 0.0 {
            return f64::INFINITY;
        }
        (l / s).max(1.0)
    }

    /// Orientation of the long extent; none for circles.
    pub fn angle_deg(&self) -> Option<f64> {
        match *self {
            ShapePrimitive::Circle { .. } => None,
            ShapePrimitive::Rectangle { angle_deg, .. } | ShapePrimitive::Ellipse { angle_deg, .. } => {
                Some(angle_deg)
            }
            ShapePrimitive::IsoscelesTriangle {
                apex,
                base_midpoint,
                base_length,
                ..
            } => {
                let axis = p2(apex) - p2(base_midpoint);
                let h = axis.norm();
                let along = if base_length >= h {
                    nalgebra::Vector2::new(-axis.y, axis.x)
                } else {
                    axis
                };
                Some(angle_mod_180(along.y.atan2(along.x).to_degrees()))
            }
        }
    }

    pub fn triangle_vertices(&self) -> Option<[P2; 3]> {
        let ShapePrimitive::IsoscelesTriangle {
            apex,
            base_midpoint,
            base_length,
            ..
        } = *self
        else {
            return None;
        };
        let (a, m) = (p2(apex), p2(base_midpoint));
        let axis = (a - m).normalize();
        let perp = nalgebra::Vector2::new(-axis.y, axis.x) * (base_length / 2.0);
        Some([a, m + perp, m - perp])
    }

    /// Unsigned distance from `p` to the primitive's outline.
    pub fn boundary_distance(&self, p: P2) -> f64 {
        match *self {
            ShapePrimitive::Circle { center, radius } => ((p - p2(center)).norm() - radius).abs(),
            ShapePrimitive::Rectangle {
                center,
                long,
                short,
                angle_deg,
            } => {
                let corners = rect_corners(p2(center), long, short, angle_deg);
                point_ring_distance(p, &corners)
            }
            ShapePrimitive::Ellipse {
                center,
                major,
                minor,
                angle_deg,
            } => {
                let t = angle_deg.to_radians();
                let d = p - p2(center);
                let u = d.x * t.cos() + d.y * t.sin();
                let v = -d.x * t.sin() + d.y * t.cos();
                ellipse_distance(major / 2.0, minor / 2.0, u.abs(), v.abs())
            }
            ShapePrimitive::IsoscelesTriangle { .. } => {
                let tri = self.triangle_vertices().expect("triangle");
                point_ring_distance(p, &tri)
            }
        }
    }

    /// Outline as a polygon (circles and ellipses sampled at 64 points).
    pub fn outline(&self) -> Vec<P2> {
        let sample = |c: P2, a: f64, b: f64, deg: f64| -> Vec<P2> {
            let t = deg.to_radians();
            (0..64)
                .map(|i| {
                    let s = i as f64 * std::f64::consts::TAU / 64.0;
                    let (u, v) = (a * s.cos(), b * s.sin());
                    P2::new(c.x + u * t.cos() - v * t.sin(), c.y + u * t.sin() + v * t.cos())
                })
                .collect()
        };
        match *self {
            ShapePrimitive::Circle { center, radius } => sample(p2(center), radius, radius, 0.0),
            ShapePrimitive::Ellipse {
                center,
                major,
                minor,
                angle_deg,
            } => sample(p2(center), major / 2.0, minor / 2.0, angle_deg),
            ShapePrimitive::Rectangle {
                center,
                long,
                short,
                angle_deg,
            } => rect_corners(p2(center), long, short, angle_deg).to_vec(),
            ShapePrimitive::IsoscelesTriangle { .. } => self.triangle_vertices().expect("triangle").to_vec(),
        }
    }
}

fn rect_corners(c: P2, long: f64, short: f64, angle_deg: f64) -> [P2; 4] {
    let t = angle_deg.to_radians();
    let u = nalgebra::Vector2::new(t.cos(), t.sin()) * (long / 2.0);
    let v = nalgebra::Vector2::new(-t.sin(), t.cos()) * (short / 2.0);
    [c - u - v, c + u - v, c + u + v, c - u + v]
}

/// Distance from `(y0, y1)` (first quadrant) to the ellipse with semi-axes
/// `e0 >= e1`, by bisection on the closest-point equation (Eberly).
fn ellipse_distance(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if e1 <= 0.0 {
        return point_ring_distance(P2::new(y0, y1), &[P2::new(-e0, 0.0), P2::new(e0, 0.0)]);
    }
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1).powi(2);
            let s = ellipse_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            ((x0 - y0).powi(2) + (x1 - y1).powi(2)).sqrt()
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde = numer / denom;
            let x0 = e0 * xde;
            let x1 = e1 * (1.0 - xde * xde).max(0.0).sqrt();
            ((x0 - y0).powi(2) + x1 * x1).sqrt()
        } else {
            (y0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let g = (n0 / (s + r0)).powi(2) + (z1 / (s + 1.0)).powi(2) - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Area over the area of the minimum enclosing circle.
pub fn shape_factor(poly: &Polygon) -> f64 {
    let c = min_enclosing_circle(&poly.outer);
    if c.radius <= 0.0 {
        return 0.0;
    }
    poly.area() / (std::f64::consts::PI * c.radius * c.radius)
}

/// Mean distance from `pts` to the primitive outline.
pub fn mean_boundary_error(prim: &ShapePrimitive, pts: &[P2]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    pts.iter().map(|&p| prim.boundary_distance(p)).sum::<f64>() / pts.len() as f64
}

/// Circle when the shape factor reaches 0.9; otherwise a triangle when the
/// simplified hull keeps three vertices; otherwise the better of the
/// minimum-area rectangle and its inscribed ellipse.
pub fn fit_primitive(poly: &Polygon, epsilon_pct: f64) -> Result<ShapePrimitive> {
    let hull = hull_points(&poly.outer);
    if hull.len() < 3 || signed_area(&hull) <= 0.0 {
        return Err(Error::DegenerateGeometry("part outline has no area".into()));
    }
    let hull_poly = Polygon {
        outer: hull.clone(),
        holes: Vec::new(),
    };
    if shape_factor(&hull_poly) >= CIRCLE_SHAPE_FACTOR {
        let c = min_enclosing_circle(&hull);
        return Ok(ShapePrimitive::Circle {
            center: arr(c.center),
            radius: c.radius,
        });
    }
    let eps = epsilon_pct / 100.0 * ring_perimeter(&hull);
    let simplified = simplify_ring(&hull, eps);
    if simplified.len() == 3 {
        return Ok(isosceles([simplified[0], simplified[1], simplified[2]]));
    }
    let rect = min_area_rect(&hull)?;
    let r = ShapePrimitive::Rectangle {
        center: arr(rect.center),
        long: rect.long,
        short: rect.short,
        angle_deg: rect.angle_deg,
    };
    let e = ShapePrimitive::Ellipse {
        center: arr(rect.center),
        major: rect.long,
        minor: rect.short,
        angle_deg: rect.angle_deg,
    };
    if mean_boundary_error(&e, &poly.outer) < mean_boundary_error(&r, &poly.outer) {
        Ok(e)
    } else {
        Ok(r)
    }
}

/// Isosceles triangle from three points: the base is the side whose two
/// adjacent sides differ least; both legs take their mean length and the
/// base length is adjusted so the area is unchanged.
pub fn isosceles(t: [P2; 3]) -> ShapePrimitive {
    let area = signed_area(&t).abs();
    // base opposite vertex k
    let k = (0..3)
        .min_by(|&a, &b| {
            let diff = |k: usize| {
                let v = t[k];
                ((t[(k + 1) % 3] - v).norm() - (t[(k + 2) % 3] - v).norm()).abs()
            };
            diff(a).total_cmp(&diff(b)).then(a.cmp(&b))
        })
        .expect("three candidates");
    let apex = t[k];
    let (b0, b1) = (t[(k + 1) % 3], t[(k + 2) % 3]);
    let leg = 0.5 * ((b0 - apex).norm() + (b1 - apex).norm());
    let old_base = (b1 - b0).norm();
    let mid = P2::from((b0.coords + b1.coords) / 2.0);
    // half-base s and height h with s^2 + h^2 = leg^2 and s h = area
    let l2 = leg * leg;
    let disc = (l2 * l2 - 4.0 * area * area).max(0.0).sqrt();
    let roots = [(l2 + disc) / 2.0, (l2 - disc) / 2.0];
    let s2 = roots
        .into_iter()
        .min_by(|a, b| {
            (2.0 * a.sqrt() - old_base)
                .abs()
                .total_cmp(&(2.0 * b.sqrt() - old_base).abs())
        })
        .expect("two roots");
    let s = s2.sqrt();
    let h = (l2 - s2).max(0.0).sqrt();
    let dir = b1 - b0;
    let mut normal = nalgebra::Vector2::new(-dir.y, dir.x).normalize();
    if (apex - mid).dot(&normal) < 0.0 {
        normal = -normal;
    }
    ShapePrimitive::IsoscelesTriangle {
        apex: arr(mid + normal * h),
        base_midpoint: arr(mid),
        leg_length: leg,
        base_length: 2.0 * s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAttributes {
    pub shape: ShapePrimitive,
    pub centroid_px: [f64; 2],
    pub area_pct: f64,
    pub aspect_ratio: f64,
    pub angle_deg: Option<f64>,
    pub color: String,
    pub width_px: f64,
    pub extra: BTreeMap<String, String>,
}

pub fn node_attributes(
    part: &ConvexPart,
    primitive: ShapePrimitive,
    rgb: &Raster<[u8; 3]>,
    total_area_px: usize,
) -> NodeAttributes {
    let (_, short) = primitive.extents();
    NodeAttributes {
        centroid_px: arr(part.centroid_px),
        area_pct: 100.0 * part.area_px as f64 / total_area_px.max(1) as f64,
        aspect_ratio: primitive.aspect_ratio(),
        angle_deg: primitive.angle_deg(),
        color: dominant_color(&part.pixels, rgb).to_string(),
        width_px: short,
        extra: BTreeMap::new(),
        shape: primitive,
    }
}
