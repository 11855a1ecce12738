//! Principal axes of 2D and 3D point sets.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::rect::angle_mod_180;
use crate::error::{Error, Result};

/// Relative gap between the two leading variances below which orientation
/// is considered ambiguous.
pub const TIE_RELATIVE_GAP: f64 = 0.01;

/// Centroid, orthonormal axes (rows of `axes`) and per-axis variance, sorted
/// by descending variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAxes<const N: usize> {
    pub center: [f64; N],
    pub axes: [[f64; N]; N],
    pub lengths: [f64; N],
    /// Leading variances differ by less than [`TIE_RELATIVE_GAP`].
    pub ambiguous: bool,
}

impl PrincipalAxes<2> {
    /// Angle of the leading axis from +x towards +y, degrees in `[0, 180)`.
    /// Zero when the orientation is ambiguous.
    pub fn angle_deg(&self) -> f64 {
        if self.ambiguous {
            return 0.0;
        }
        let [x, y] = self.axes[0];
        angle_mod_180(y.atan2(x).to_degrees())
    }
}

// First axis gets non-negative x; if x is ~0, non-negative y.
fn canonical_sign<const N: usize>(mut v: [f64; N]) -> [f64; N] {
    let flip = if v[0].abs() > 1e-12 {
        v[0] < 0.0
    } else {
        N > 1 && v[1] < 0.0
    };
    if flip {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    v
}

fn is_tie(l0: f64, l1: f64) -> bool {
    l0 - l1 < TIE_RELATIVE_GAP * l0
}

pub fn principal_axes_2d(points: &[[f64; 2]]) -> Result<PrincipalAxes<2>> {
    if points.len() < 2 {
        return Err(Error::DegenerateGeometry("PCA needs two points".into()));
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let (a, b, c) = (sxx / n, sxy / n, syy / n);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l0, l1) = (mean + rad, (mean - rad).max(0.0));
    if l0 <= 1e-15 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let first = canonical_sign([theta.cos(), theta.sin()]);
    let second = [-first[1], first[0]];
    Ok(PrincipalAxes {
        center: [mx, my],
        axes: [first, second],
        lengths: [l0, l1],
        ambiguous: is_tie(l0, l1),
    })
}

pub fn principal_axes_3d(points: &[[f64; 3]]) -> Result<PrincipalAxes<3>> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry("3D PCA needs three points".into()));
    }
    let n = points.len() as f64;
    let mean = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
        / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(*p) - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let lengths = order.map(|i| eig.eigenvalues[i].max(0.0));
    if lengths[0] <= 1e-15 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let axes = order.map(|i| {
        let v = eig.eigenvectors.column(i);
        canonical_sign([v[0], v[1], v[2]])
    });
    Ok(PrincipalAxes {
        center: [mean.x, mean.y, mean.z],
        axes,
        lengths,
        ambiguous: is_tie(lengths[0], lengths[1]),
    })
}
