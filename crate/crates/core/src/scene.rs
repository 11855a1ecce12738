//! Raster inputs, camera intrinsics and back-projection to a point cloud.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, GrayImage, RgbImage};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, Pixel, Raster};

/// Per-pixel confidence at or above which depth counts as high-confidence.
pub const HIGH_CONFIDENCE_CUTOFF: f32 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = CameraIntrinsics { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidInput(
                "intrinsics need finite values and positive focal lengths".into(),
            ));
        }
        Ok(())
    }

    /// Camera-frame point for pixel `(u, v) = (col, row)` at depth `z`.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        Point3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Pixel `(u, v)` of a camera-frame point.
    pub fn project(&self, p: &Point3<f64>) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// Depth raster in metres (0 marks invalid), per-pixel confidence in `[0, 1]`
/// and the intrinsics that relate them to camera space.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthData {
    pub depth: Raster<f32>,
    pub confidence: Raster<f32>,
    pub intrinsics: CameraIntrinsics,
}

/// Validated scene: RGB image, object mask and optional depth.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneInput {
    pub width: usize,
    pub height: usize,
    pub rgb: Raster<[u8; 3]>,
    pub mask: Mask,
    pub depth: Option<DepthData>,
}

fn check_dims(what: &'static str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch {
            what,
            got_w: got.0,
            got_h: got.1,
            want_w: want.0,
            want_h: want.1,
        });
    }
    Ok(())
}

impl SceneInput {
    pub fn new(rgb: Raster<[u8; 3]>, mask: Mask, depth: Option<DepthData>) -> Result<Self> {
        let dims = mask.dims();
        check_dims("rgb", rgb.dims(), dims)?;
        if let Some(d) = &depth {
            check_dims("depth", d.depth.dims(), dims)?;
            check_dims("confidence", d.confidence.dims(), dims)?;
            if d.depth.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput("depth values must be finite and >= 0".into()));
            }
            if d.confidence.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInput("confidence values must lie in [0, 1]".into()));
            }
            d.intrinsics.validate()?;
        }
        if mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(SceneInput {
            width: dims.0,
            height: dims.1,
            rgb,
            mask,
            depth,
        })
    }

    /// Same scene with the mask reduced to its largest connected component.
    pub fn with_object_mask(&self) -> SceneInput {
        SceneInput {
            mask: self.mask.largest_component(),
            ..self.clone()
        }
    }

    /// Depth at a pixel when it is positive and at least `min_confidence`.
    pub fn valid_depth(&self, (r, c): Pixel, min_confidence: f32) -> Option<f64> {
        let d = self.depth.as_ref()?;
        let z = *d.depth.get(r as usize, c as usize);
        let conf = *d.confidence.get(r as usize, c as usize);
        (z > 0.0 && conf >= min_confidence).then_some(z as f64)
    }
}

/// Masked pixels lifted to camera space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub pixel_of: Vec<Pixel>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One point per masked pixel with positive depth and confidence at least
/// `min_confidence`; `x = (u - cx) z / fx`, `y = (v - cy) z / fy`.
pub fn back_project(scene: &SceneInput, min_confidence: f32) -> Result<PointCloud> {
    let d = scene
        .depth
        .as_ref()
        .ok_or_else(|| Error::DegeneratePointCloud("scene has no depth".into()))?;
    let mut points = Vec::new();
    let mut pixel_of = Vec::new();
    for px in scene.mask.pixels() {
        if let Some(z) = scene.valid_depth(px, min_confidence) {
            points.push(d.intrinsics.unproject(px.1 as f64, px.0 as f64, z));
            pixel_of.push(px);
        }
    }
    if points.len() < 3 {
        return Err(Error::DegeneratePointCloud(format!(
            "{} valid points",
            points.len()
        )));
    }
    Ok(PointCloud { points, pixel_of })
}

/// Fraction of masked pixels whose confidence is at least `cutoff`.
/// Scenes without depth report 0.
pub fn depth_confidence_fraction(scene: &SceneInput, cutoff: f32) -> f64 {
    let Some(d) = &scene.depth else {
        return 0.0;
    };
    let mut total = 0usize;
    let mut high = 0usize;
    for (i, &m) in scene.mask.data().iter().enumerate() {
        if m {
            total += 1;
            if d.confidence.data()[i] >= cutoff {
                high += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        high as f64 / total as f64
    }
}

// ---------------------------------------------------------------------------
// File formats

/// Paths of the input files. Depth, confidence and intrinsics are optional
/// as a group; confidence defaults to 1 when only depth is given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenePaths {
    pub mask: PathBuf,
    pub rgb: PathBuf,
    pub depth: Option<PathBuf>,
    pub confidence: Option<PathBuf>,
    pub intrinsics: Option<PathBuf>,
}

pub fn load_scene(paths: &ScenePaths) -> Result<SceneInput> {
    let mask = load_mask(&paths.mask)?;
    let rgb = load_rgb(&paths.rgb)?;
    let depth = match &paths.depth {
        None => None,
        Some(dp) => {
            let depth = load_float_raster(dp)?;
            let confidence = match &paths.confidence {
                Some(cp) => load_float_raster(cp)?,
                None => Raster::filled(depth.width(), depth.height(), 1.0),
            };
            let ip = paths.intrinsics.as_ref().ok_or_else(|| {
                Error::InvalidInput("depth given without --intrinsics".into())
            })?;
            Some(DepthData {
                depth,
                confidence,
                intrinsics: load_intrinsics(ip)?,
            })
        }
    };
    SceneInput::new(rgb, mask, depth)
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

/// 8-bit grayscale PNG or PGM; any nonzero value marks the object.
pub fn load_mask(path: &Path) -> Result<Mask> {
    let img = open_image(path)?;
    if !matches!(img.color(), ColorType::L8 | ColorType::L16 | ColorType::La8) {
        return Err(Error::format(path, "mask must be a grayscale image"));
    }
    let g = img.to_luma8();
    let (w, h) = (g.width() as usize, g.height() as usize);
    Ok(Raster::from_vec(w, h, g.into_raw().into_iter().map(|v| v != 0).collect())
        .expect("luma buffer matches dimensions"))
}

/// 8-bit RGB PNG or PPM. Grayscale images are rejected.
pub fn load_rgb(path: &Path) -> Result<Raster<[u8; 3]>> {
    let img = open_image(path)?;
    if !matches!(img.color(), ColorType::Rgb8 | ColorType::Rgba8) {
        return Err(Error::format(
            path,
            format!("expected 8-bit RGB, found {:?}", img.color()),
        ));
    }
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0).collect();
    Ok(Raster::from_vec(w, h, data).expect("rgb buffer matches dimensions"))
}

pub fn load_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let k: CameraIntrinsics =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    k.validate()?;
    Ok(k)
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSidecar {
    width: usize,
    height: usize,
}

/// PFM (detected by its `Pf` header) or headerless little-endian float32
/// with a `<file>.json` sidecar holding `{width, height}`.
/// Non-finite samples are read as 0 (invalid).
pub fn load_float_raster(path: &Path) -> Result<Raster<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raster = if bytes.starts_with(b"Pf") || bytes.starts_with(b"PF") {
        parse_pfm(&bytes).map_err(|m| Error::format(path, m))?
    } else {
        let sidecar = sidecar_path(path);
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let meta: RawSidecar =
            serde_json::from_str(&text).map_err(|e| Error::format(&sidecar, e.to_string()))?;
        if bytes.len() != meta.width * meta.height * 4 {
            return Err(Error::format(
                path,
                format!(
                    "raw float raster has {} bytes, sidecar says {}x{}",
                    bytes.len(),
                    meta.width,
                    meta.height
                ),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Raster::from_vec(meta.width, meta.height, data).expect("size checked")
    };
    Ok(raster.map(|v| if v.is_finite() { *v } else { 0.0 }))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn parse_pfm(bytes: &[u8]) -> std::result::Result<Raster<f32>, String> {
    // three whitespace-terminated header tokens: magic, "w h", scale
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PFM header".into());
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte before the payload
    let channels = match tokens[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(format!("bad PFM magic {other:?}")),
    };
    let w: usize = tokens[1].parse().map_err(|_| "bad PFM width")?;
    let h: usize = tokens[2].parse().map_err(|_| "bad PFM height")?;
    let scale: f32 = tokens[3].parse().map_err(|_| "bad PFM scale")?;
    let little = scale < 0.0;
    let payload = bytes.get(pos..).unwrap_or_default();
    if payload.len() != w * h * channels * 4 {
        return Err(format!(
            "PFM payload has {} bytes, expected {}",
            payload.len(),
            w * h * channels * 4
        ));
    }
    let mut data = vec![0f32; w * h];
    for row in 0..h {
        // PFM stores rows bottom to top
        let dst = h - 1 - row;
        for col in 0..w {
            let off = ((row * w + col) * channels) * 4;
            let b = [payload[off], payload[off + 1], payload[off + 2], payload[off + 3]];
            data[dst * w + col] = if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
        }
    }
    Ok(Raster::from_vec(w, h, data).expect("size checked"))
}

/// Encode a single-channel little-endian PFM.
pub fn encode_pfm(r: &Raster<f32>) -> Vec<u8> {
    let (w, h) = r.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for row in (0..h).rev() {
        for col in 0..w {
            out.extend_from_slice(&r.get(row, col).to_le_bytes());
        }
    }
    out
}

pub fn write_pfm(path: &Path, r: &Raster<f32>) -> Result<()> {
    fs::write(path, encode_pfm(r)).map_err(|e| Error::io(path, e))
}

pub fn write_mask_png(path: &Path, m: &Mask) -> Result<()> {
    let (w, h) = m.dims();
    let img = GrayImage::from_raw(
        w as u32,
        h as u32,
        m.data().iter().map(|&b| if b { 255 } else { 0 }).collect(),
    )
    .expect("buffer matches dimensions");
    img.save(path).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_rgb_png(path: &Path, rgb: &Raster<[u8; 3]>) -> Result<()> {
    let (w, h) = rgb.dims();
    let img = RgbImage::from_raw(w as u32, h as u32, rgb.data().concat())
        .expect("buffer matches dimensions");
    img.save(path).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_intrinsics(path: &Path, k: &CameraIntrinsics) -> Result<()> {
    let s = serde_json::to_string_pretty(k).expect("intrinsics serialise");
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Write every raster of a scene into `dir` using the default file names
/// (`mask.png`, `rgb.png`, `depth.pfm`, `confidence.pfm`, `intrinsics.json`).
pub fn write_scene(dir: &Path, scene: &SceneInput) -> Result<ScenePaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = ScenePaths {
        mask: dir.join("mask.png"),
        rgb: dir.join("rgb.png"),
        ..Default::default()
    };
    write_mask_png(&paths.mask, &scene.mask)?;
    write_rgb_png(&paths.rgb, &scene.rgb)?;
    if let Some(d) = &scene.depth {
        let (dp, cp, ip) = (
            dir.join("depth.pfm"),
            dir.join("confidence.pfm"),
            dir.join("intrinsics.json"),
        );
        write_pfm(&dp, &d.depth)?;
        write_pfm(&cp, &d.confidence)?;
        write_intrinsics(&ip, &d.intrinsics)?;
        paths.depth = Some(dp);
        paths.confidence = Some(cp);
        paths.intrinsics = Some(ip);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 32.0, 32.0).unwrap()
    }

    fn scene_with(mask: Mask, depth: f32, conf: impl Fn(usize, usize) -> f32) -> SceneInput {
        let (w, h) = mask.dims();
        let mut c = Raster::filled(w, h, 1.0f32);
        for r in 0..h {
            for col in 0..w {
                c.set(r, col, conf(r, col));
            }
        }
        SceneInput::new(
            Raster::filled(w, h, [0, 0, 0]),
            mask,
            Some(DepthData {
                depth: Raster::filled(w, h, depth),
                confidence: c,
                intrinsics: k(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn empty_mask_rejected() {
        let r = SceneInput::new(
            Raster::filled(64, 64, [0; 3]),
            Mask::filled(64, 64, false),
            None,
        );
        assert!(matches!(r, Err(Error::EmptyMask)));
    }

    #[test]
    fn depth_size_mismatch() {
        let mut m = Mask::filled(64, 64, false);
        m.set(3, 3, true);
        let r = SceneInput::new(
            Raster::filled(64, 64, [0; 3]),
            m,
            Some(DepthData {
                depth: Raster::filled(32, 32, 1.0),
                confidence: Raster::filled(32, 32, 1.0),
                intrinsics: k(),
            }),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { what: "depth", .. })));
    }

    #[test]
    fn principal_point_and_unit_offset() {
        let kk = k();
        let p = kk.unproject(kk.cx, kk.cy, 1.0);
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, 1.0));
        let q = kk.unproject(kk.cx + kk.fx, kk.cy, 2.0);
        assert_eq!((q.x, q.y, q.z), (2.0, 0.0, 2.0));
    }

    #[test]
    fn plane_back_projects_to_constant_z_and_reprojects() {
        let mut m = Mask::filled(64, 64, false);
        for r in 10..20 {
            for c in 10..20 {
                m.set(r, c, true);
            }
        }
        let s = scene_with(m, 0.5, |_, _| 1.0);
        let cloud = back_project(&s, 0.0).unwrap();
        assert_eq!(cloud.len(), 100);
        for (p, &(r, c)) in cloud.points.iter().zip(&cloud.pixel_of) {
            assert_eq!(p.z, 0.5);
            let (u, v) = k().project(p);
            assert!((u - c as f64).abs() < 0.5 && (v - r as f64).abs() < 0.5);
        }
    }

    #[test]
    fn zero_depth_is_skipped() {
        let mut m = Mask::filled(8, 8, false);
        for c in 0..5 {
            m.set(2, c, true);
        }
        let mut s = scene_with(m, 1.0, |_, _| 1.0);
        s.depth.as_mut().unwrap().depth.set(2, 0, 0.0);
        assert_eq!(back_project(&s, 0.0).unwrap().len(), 4);
    }

    #[test]
    fn confidence_fraction_counts_masked_only() {
        let mut m = Mask::filled(8, 8, false);
        for c in 0..8 {
            m.set(0, c, true);
        }
        let s = scene_with(m, 1.0, |r, c| if r > 0 { 0.0 } else if c < 4 { 0.9 } else { 0.1 });
        assert_eq!(depth_confidence_fraction(&s, 0.5), 0.5);
        let all = scene_with(s.mask.clone(), 1.0, |_, _| 1.0);
        assert_eq!(depth_confidence_fraction(&all, 0.5), 1.0);
    }

    #[test]
    fn pfm_round_trip_and_bad_header() {
        let mut r = Raster::filled(3, 2, 0.0f32);
        r.set(0, 2, 1.5);
        r.set(1, 0, -2.0);
        assert_eq!(parse_pfm(&encode_pfm(&r)).unwrap(), r);
        assert!(parse_pfm(b"P5\n3 2\n-1.0\n").is_err());
        assert!(parse_pfm(b"Pf\n3 2\n-1.0\n\0\0").is_err());
    }
}
