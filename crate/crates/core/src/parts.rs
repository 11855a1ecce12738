//! Part and decomposition types shared by the 2D and 3D decomposers.

use serde::{Deserialize, Serialize};

use crate::geom::{Polygon, P2};
use crate::raster::{Mask, Pixel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    TwoD,
    ThreeD,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::TwoD => "2d",
            Source::ThreeD => "3d",
        }
    }
}

/// Metric data carried by parts of a point-cloud decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartCloud {
    /// Indices into the source point cloud.
    #[serde(skip)]
    pub points: Vec<usize>,
    pub point_count: usize,
    pub centroid_m: [f64; 3],
}

/// One approximately convex part. `polygon` is the image-plane outline
/// (the split polygon in 2D, the hull of the part's pixels in 3D).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPart {
    pub polygon: Polygon,
    #[serde(skip)]
    pub pixels: Vec<Pixel>,
    pub area_px: usize,
    pub centroid_px: P2,
    pub concavity: f64,
    pub cloud: Option<PartCloud>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub source: Source,
    pub parts: Vec<ConvexPart>,
    pub gamma_used: f64,
    /// Number of threshold reductions performed by the search.
    pub iterations: u32,
    /// The search reached the floor without producing two parts.
    pub degenerate: bool,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_pixels(&self) -> usize {
        self.parts.iter().map(|p| p.area_px).sum()
    }
}

/// Merge every pixel group smaller than `min_fraction` of the total into its
/// largest 4-adjacent neighbour (the largest group overall when isolated).
/// Returns, for each surviving group, the indices of the groups folded into
/// it (itself first), in original order.
pub fn merge_small_groups(
    groups: &mut Vec<Vec<Pixel>>,
    dims: (usize, usize),
    min_fraction: f64,
) -> Vec<Vec<usize>> {
    let total: usize = groups.iter().map(Vec::len).sum();
    let min_px = (min_fraction * total as f64).ceil() as usize;
    let (w, h) = dims;
    let mut label = vec![usize::MAX; w * h];
    for (g, px) in groups.iter().enumerate() {
        for &(r, c) in px {
            label[r as usize * w + c as usize] = g;
        }
    }
    let mut members: Vec<Vec<usize>> = (0..groups.len()).map(|g| vec![g]).collect();
    let mut alive: Vec<bool> = groups.iter().map(|g| !g.is_empty()).collect();
    loop {
        if groups.iter().filter(|g| !g.is_empty()).count() <= 1 {
            break;
        }
        // smallest offending group first, ties by index
        let Some(small) = (0..groups.len())
            .filter(|&g| alive[g] && groups[g].len() < min_px)
            .min_by_key(|&g| (groups[g].len(), g))
        else {
            break;
        };
        let mut neighbours = std::collections::BTreeSet::new();
        for &(r, c) in &groups[small] {
            let (r, c) = (r as usize, c as usize);
            let cand = [
                (r.wrapping_sub(1), c),
                (r + 1, c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
            ];
            for (rr, cc) in cand {
                if rr < h && cc < w {
                    let l = label[rr * w + cc];
                    if l != usize::MAX && l != small {
                        neighbours.insert(l);
                    }
                }
            }
        }
        let pool: Vec<usize> = if neighbours.is_empty() {
            (0..groups.len()).filter(|&g| g != small && !groups[g].is_empty()).collect()
        } else {
            neighbours.into_iter().collect()
        };
        let Some(&target) = pool.iter().max_by_key(|&&g| (groups[g].len(), std::cmp::Reverse(g))) else {
            break;
        };
        let moved = std::mem::take(&mut groups[small]);
        for &(r, c) in &moved {
            label[r as usize * w + c as usize] = target;
        }
        groups[target].extend(moved);
        let m = std::mem::take(&mut members[small]);
        members[target].extend(m);
        alive[small] = false;
    }
    let mut out = Vec::new();
    let mut kept = Vec::new();
    for (g, px) in std::mem::take(groups).into_iter().enumerate() {
        if alive[g] && !px.is_empty() {
            let mut px = px;
            px.sort_unstable();
            kept.push(px);
            out.push(std::mem::take(&mut members[g]));
        }
    }
    *groups = kept;
    out
}

/// Mask holding the given pixels.
pub fn pixels_to_mask(pixels: &[Pixel], dims: (usize, usize)) -> Mask {
    Mask::from_pixels(dims.0, dims.1, pixels)
}
