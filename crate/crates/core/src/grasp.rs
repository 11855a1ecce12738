//! Grasp position and in-plane rotation for the selected part.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::principal_axes_2d;
use crate::raster::Pixel;
use crate::scene::{SceneInput, HIGH_CONFIDENCE_CUTOFF};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    /// Camera frame, metres. Absent when the scene has no usable depth.
    pub position_m: Option<[f64; 3]>,
    /// Pixel centroid `(u, v)` of the part.
    pub pixel: [f64; 2],
    /// Image-plane angle of the part's long axis, `[0, 180)`. The gripper
    /// closes perpendicular to it.
    pub yaw_deg: f64,
    pub ambiguous_yaw: bool,
    pub node: usize,
    /// Where `z` came from: "part", "mask" or "none".
    pub depth_source: String,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn valid_depths(scene: &SceneInput, pixels: &[Pixel]) -> Vec<f64> {
    pixels
        .iter()
        .filter_map(|&p| scene.valid_depth(p, HIGH_CONFIDENCE_CUTOFF))
        .collect()
}

/// `strict_depth` turns a missing `z` into [`Error::NoValidDepth`].
pub fn compute_grasp(
    scene: &SceneInput,
    pixels: &[Pixel],
    node: usize,
    strict_depth: bool,
) -> Result<GraspPose> {
    if pixels.is_empty() {
        return Err(Error::DegeneratePart(node));
    }
    let n = pixels.len() as f64;
    let (su, sv) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), &(r, c)| (a + c as f64, b + r as f64));
    let (u, v) = (su / n, sv / n);

    let (z, depth_source) = match median(valid_depths(scene, pixels)) {
        Some(z) => (Some(z), "part"),
        None => match median(valid_depths(scene, &scene.mask.pixels())) {
            Some(z) => (Some(z), "mask"),
            None => (None, "none"),
        },
    };
    if z.is_none() && strict_depth {
        return Err(Error::NoValidDepth);
    }
    let intrinsics = scene.depth.as_ref().map(|d| d.intrinsics);
    let position_m = match (z, intrinsics) {
        (Some(z), Some(k)) => {
            let p = k.unproject(u, v, z);
            Some([p.x, p.y, p.z])
        }
        _ => None,
    };

    // Metric points where depth is valid, pixel centres otherwise.
    let metric: Vec<[f64; 2]> = match intrinsics {
        Some(k) => pixels
            .iter()
            .filter_map(|&(r, c)| {
                let z = scene.valid_depth((r, c), HIGH_CONFIDENCE_CUTOFF)?;
                let p = k.unproject(c as f64, r as f64, z);
                Some([p.x, p.y])
            })
            .collect(),
        None => Vec::new(),
    };
    let planar: Vec<[f64; 2]> = if metric.len() >= 2 {
        metric
    } else {
        pixels.iter().map(|&(r, c)| [c as f64, r as f64]).collect()
    };
    let (yaw_deg, ambiguous_yaw) = match principal_axes_2d(&planar) {
        Ok(axes) => (axes.angle_deg(), axes.ambiguous),
        Err(_) => (0.0, true),
    };
    Ok(GraspPose {
        position_m,
        pixel: [u, v],
        yaw_deg,
        ambiguous_yaw,
        node,
        depth_source: depth_source.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{Mask, Raster};
    use crate::scene::{CameraIntrinsics, DepthData};
    use approx::assert_abs_diff_eq;

    fn scene(mask: Mask, depth: Option<f32>) -> SceneInput {
        let (w, h) = mask.dims();
        let depth = depth.map(|z| DepthData {
            depth: Raster::filled(w, h, z),
            confidence: Raster::filled(w, h, 1.0),
            intrinsics: CameraIntrinsics::new(500.0, 500.0, (w / 2) as f64, (h / 2) as f64).unwrap(),
        });
        SceneInput::new(Raster::filled(w, h, [0, 0, 0]), mask, depth).unwrap()
    }

    fn bar(w: usize, h: usize, angle_deg: f64, half_len: f64, half_w: f64) -> Mask {
        let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
        let (s, c) = angle_deg.to_radians().sin_cos();
        let mut m = Mask::filled(w, h, false);
        for r in 0..h {
            for col in 0..w {
                let (dx, dy) = (col as f64 - cx, r as f64 - cy);
                let (a, b) = (dx * c + dy * s, -dx * s + dy * c);
                if a.abs() <= half_len && b.abs() <= half_w {
                    m.set(r, col, true);
                }
            }
        }
        m
    }

    #[test]
    fn centred_bar_on_flat_depth() {
        let m = bar(200, 160, 0.0, 40.0, 8.0);
        let s = scene(m.clone(), Some(0.5));
        let g = compute_grasp(&s, &m.pixels(), 0, true).unwrap();
        let p = g.position_m.unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[2], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(g.yaw_deg, 0.0, epsilon = 1e-6);
        assert!(!g.ambiguous_yaw);
    }

    #[test]
    fn rotated_bars() {
        for angle in [30.0, 60.0, 120.0] {
            let m = bar(240, 240, angle, 60.0, 6.0);
            let g = compute_grasp(&scene(m.clone(), Some(0.5)), &m.pixels(), 0, false).unwrap();
            assert!((g.yaw_deg - angle).abs() < 2.0, "{angle}: {}", g.yaw_deg);
        }
    }

    #[test]
    fn disk_is_ambiguous() {
        let mut m = Mask::filled(101, 101, false);
        for r in 0..101 {
            for c in 0..101 {
                if (r as f64 - 50.0).hypot(c as f64 - 50.0) <= 30.0 {
                    m.set(r, c, true);
                }
            }
        }
        let g = compute_grasp(&scene(m.clone(), Some(0.4)), &m.pixels(), 0, false).unwrap();
        assert!(g.ambiguous_yaw);
        assert_eq!(g.yaw_deg, 0.0);
    }

    #[test]
    fn depth_fallbacks() {
        let m = bar(100, 100, 0.0, 20.0, 5.0);
        let g = compute_grasp(&scene(m.clone(), None), &m.pixels(), 3, false).unwrap();
        assert_eq!((g.position_m, g.depth_source.as_str(), g.node), (None, "none", 3));
        assert!(matches!(
            compute_grasp(&scene(m.clone(), None), &m.pixels(), 0, true),
            Err(Error::NoValidDepth)
        ));
        assert!(matches!(compute_grasp(&scene(m, None), &[], 2, false), Err(Error::DegeneratePart(2))));
    }

    #[test]
    fn median_ignores_outliers() {
        let m = bar(120, 120, 0.0, 30.0, 10.0);
        let mut s = scene(m.clone(), Some(0.6));
        let px = m.pixels();
        let d = s.depth.as_mut().unwrap();
        for (i, &(r, c)) in px.iter().enumerate() {
            if i % 5 == 0 {
                d.depth.set(r as usize, c as usize, 3.0);
            }
        }
        let g = compute_grasp(&s, &px, 0, true).unwrap();
        assert!((g.position_m.unwrap()[2] - 0.6).abs() < 1e-6);
    }
}
