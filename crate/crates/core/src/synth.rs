//! Synthetic tabletop scenes with ground-truth parts.
//!
//! Objects lie on a table seen from above by a pinhole camera. Each part is
//! a filled primitive with its own palette color and height above the
//! table; depth is the table distance minus the part height plus Gaussian
//! jitter, and a seeded subset of the object's pixels is marked as
//! unreliable.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::polygon::point_in_ring;
use crate::geom::P2;
use crate::raster::{Pixel, Raster};
use crate::scene::{CameraIntrinsics, DepthData, SceneInput};
use crate::shape_fit::palette_rgb;

pub const FOCAL_PX: f64 = 600.0;
pub const TABLE_DEPTH_M: f64 = 0.6;
/// Confidence written for dropped-out pixels.
pub const DROPOUT_CONFIDENCE: f32 = 0.1;
pub const BACKGROUND_RGB: [u8; 3] = [250, 250, 245];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// `size` is full width and height before rotation.
    Rect {
        center: [f64; 2],
        size: [f64; 2],
        #[serde(default)]
        angle_deg: f64,
    },
    /// `axes` are full lengths.
    Ellipse {
        center: [f64; 2],
        axes: [f64; 2],
        #[serde(default)]
        angle_deg: f64,
    },
    Circle { center: [f64; 2], radius: f64 },
    Ring { center: [f64; 2], outer: f64, inner: f64 },
    Polygon { points: Vec<[f64; 2]> },
}

impl ShapeSpec {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let local = |center: [f64; 2], angle_deg: f64| {
            let (s, c) = angle_deg.to_radians().sin_cos();
            let (dx, dy) = (x - center[0], y - center[1]);
            (dx * c + dy * s, -dx * s + dy * c)
        };
        match self {
            ShapeSpec::Rect { center, size, angle_deg } => {
                let (a, b) = local(*center, *angle_deg);
                a.abs() <= size[0] / 2.0 && b.abs() <= size[1] / 2.0
            }
            ShapeSpec::Ellipse { center, axes, angle_deg } => {
                let (a, b) = local(*center, *angle_deg);
                (a / (axes[0] / 2.0)).powi(2) + (b / (axes[1] / 2.0)).powi(2) <= 1.0
            }
            ShapeSpec::Circle { center, radius } => {
                (x - center[0]).hypot(y - center[1]) <= *radius
            }
            ShapeSpec::Ring { center, outer, inner } => {
                let d = (x - center[0]).hypot(y - center[1]);
                d <= *outer && d >= *inner
            }
            ShapeSpec::Polygon { points } => {
                let ring: Vec<P2> = points.iter().map(|p| P2::new(p[0], p[1])).collect();
                point_in_ring(&P2::new(x, y), &ring)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub label: String,
    pub shape: ShapeSpec,
    /// One of the 16 palette names.
    pub color: String,
    /// Top surface above the table, metres.
    #[serde(default = "default_height")]
    pub height_m: f64,
    /// Alternative names accepted as a correct identification.
    #[serde(default)]
    pub synonyms: Vec<String>,
}

fn default_height() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCase {
    pub task: String,
    /// Ground-truth part labels a correct grasp may land on.
    pub grasp: Vec<String>,
    #[serde(default)]
    pub max_gripper_width_px: Option<f64>,
    /// Object attributes such as "hot".
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Noise {
    /// Exact fraction of object pixels whose depth is dropped.
    pub dropout: f64,
    pub depth_sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    /// Painted in order; later parts win shared pixels.
    pub parts: Vec<PartSpec>,
    /// Label pairs allowed to overlap.
    #[serde(default)]
    pub junctions: Vec<[String; 2]>,
    #[serde(default)]
    pub tasks: Vec<TaskCase>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height_px")]
    pub height: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_width() -> usize {
    640
}

fn default_height_px() -> usize {
    480
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub objects: Vec<ObjectSpec>,
}

const SHIPPED_SUITE: &str = include_str!("../assets/suite.json");

impl Suite {
    pub fn shipped() -> Suite {
        serde_json::from_str(SHIPPED_SUITE).expect("shipped suite parses")
    }

    pub fn load(path: &Path) -> Result<Suite> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn object(&self, name: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn case_count(&self) -> usize {
        self.objects.iter().map(|o| o.tasks.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub scene: SceneInput,
    pub labels: Vec<String>,
    /// Ground-truth part index per pixel.
    pub owner: Raster<Option<u16>>,
}

impl Generated {
    pub fn part_pixels(&self, part: usize) -> Vec<Pixel> {
        let w = self.owner.width();
        self.owner
            .data()
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(part as u16))
            .map(|(i, _)| ((i / w) as u32, (i % w) as u32))
            .collect()
    }

    pub fn part_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Ground-truth part holding most of `pixels`; ties go to the lower
    /// index.
    pub fn majority_part(&self, pixels: &[Pixel]) -> Option<usize> {
        let mut counts = vec![0usize; self.labels.len()];
        for &(r, c) in pixels {
            if let Some(o) = self.owner.get(r as usize, c as usize) {
                counts[*o as usize] += 1;
            }
        }
        let best = (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))?;
        (counts[best] > 0).then_some(best)
    }
}

impl ObjectSpec {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: FOCAL_PX,
            fy: FOCAL_PX,
            cx: self.width as f64 / 2.0,
            cy: self.height as f64 / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Error::InvalidInput(format!("spec {}: {m}", self.name));
        if self.parts.is_empty() {
            return Err(bad("no parts".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(bad("empty canvas".into()));
        }
        for (i, p) in self.parts.iter().enumerate() {
            if self.parts[..i].iter().any(|q| q.label == p.label) {
                return Err(bad(format!("duplicate label {:?}", p.label)));
            }
            if palette_rgb(&p.color).is_none() {
                return Err(bad(format!("{:?} is not a palette color", p.color)));
            }
            if !(p.height_m.is_finite() && p.height_m >= 0.0 && p.height_m < TABLE_DEPTH_M) {
                return Err(bad(format!("part {:?} height {}", p.label, p.height_m)));
            }
        }
        for j in &self.junctions {
            for l in j {
                if !self.parts.iter().any(|p| &p.label == l) {
                    return Err(bad(format!("junction names unknown part {l:?}")));
                }
            }
        }
        for t in &self.tasks {
            if let Some(l) = t.grasp.iter().find(|l| !self.parts.iter().any(|p| &p.label == *l)) {
                return Err(bad(format!("task {:?} names unknown part {l:?}", t.task)));
            }
        }
        let n = &self.noise;
        if !(0.0..1.0).contains(&n.dropout) || n.depth_sigma_m.is_nan() || n.depth_sigma_m < 0.0 {
            return Err(bad("noise out of range".into()));
        }
        Ok(())
    }

    fn junction(&self, a: &str, b: &str) -> bool {
        self.junctions
            .iter()
            .any(|[x, y]| (x == a && y == b) || (x == b && y == a))
    }

    /// Rasterises the spec. The same spec and seed always give the same
    /// scene.
    pub fn generate(&self) -> Result<Generated> {
        self.validate()?;
        let (w, h) = (self.width, self.height);
        let mut owner: Raster<Option<u16>> = Raster::filled(w, h, None);
        for r in 0..h {
            for c in 0..w {
                let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                let mut top: Option<usize> = None;
                for (i, p) in self.parts.iter().enumerate() {
                    if !p.shape.contains(x, y) {
                        continue;
                    }
                    if let Some(prev) = top {
                        let (a, b) = (&self.parts[prev].label, &p.label);
                        if !self.junction(a, b) {
                            return Err(Error::SpecOverlap {
                                name: self.name.clone(),
                                a: a.clone(),
                                b: b.clone(),
                            });
                        }
                    }
                    top = Some(i);
                }
                owner.set(r, c, top.map(|i| i as u16));
            }
        }

        let mask = owner.map(Option::is_some);
        let rgb = owner.map(|o| match o {
            Some(i) => palette_rgb(&self.parts[*i as usize].color).expect("validated color"),
            None => BACKGROUND_RGB,
        });

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let jitter = Normal::new(0.0, self.noise.depth_sigma_m.max(f64::MIN_POSITIVE))
            .expect("non-negative sigma");
        let mut depth = Raster::filled(w, h, TABLE_DEPTH_M as f32);
        let mut confidence = Raster::filled(w, h, 1.0f32);
        let object_px = mask.pixels();
        for &(r, c) in &object_px {
            let part = owner.get(r as usize, c as usize).expect("object pixel") as usize;
            let mut z = TABLE_DEPTH_M - self.parts[part].height_m;
            if self.noise.depth_sigma_m > 0.0 {
                z += jitter.sample(&mut rng);
            }
            depth.set(r as usize, c as usize, z.max(1e-3) as f32);
        }
        let dropped = (self.noise.dropout * object_px.len() as f64).round() as usize;
        let mut order = object_px.clone();
        order.shuffle(&mut rng);
        for &(r, c) in &order[..dropped] {
            depth.set(r as usize, c as usize, 0.0);
            confidence.set(r as usize, c as usize, DROPOUT_CONFIDENCE);
        }

        let scene = SceneInput::new(
            rgb,
            mask,
            Some(DepthData { depth, confidence, intrinsics: self.intrinsics() }),
        )?;
        Ok(Generated {
            scene,
            labels: self.parts.iter().map(|p| p.label.clone()).collect(),
            owner,
        })
    }

    /// True when `label` names ground-truth part `part`, directly or by
    /// synonym.
    pub fn label_matches(&self, part: usize, label: &str) -> bool {
        let p = &self.parts[part];
        let l = label.trim();
        p.label.eq_ignore_ascii_case(l) || p.synonyms.iter().any(|s| s.eq_ignore_ascii_case(l))
    }
}
