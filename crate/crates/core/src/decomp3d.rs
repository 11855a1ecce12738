//! Approximate convex decomposition of a single-view point cloud.
//!
//! Points are voxelised and each occupied column (along the camera axis) is
//! extruded away from the camera to a common floor just behind the farthest
//! point, giving a solid height field. Concavity is the largest distance from
//! the convex hull's surface to that solid, divided by the hull diameter. A
//! single view sees only the front of an object, so measuring from the
//! visible boundary to the hull would be zero for most thin shells; measuring
//! from the hull inward keeps the threshold meaningful.
//!
//! Parts above the threshold are split by planes through the point of worst
//! concavity (and its nearest solid voxel), trying the three axes, the three
//! principal axes and the concavity offset direction.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::hull3d::{int_convex_hull, I3};
use crate::geom::{hull_points, principal_axes_3d, Polygon, P2};
use crate::parts::{ConvexPart, Decomposition, PartCloud, Source};
use crate::raster::{Mask, Pixel};
use crate::scene::PointCloud;

/// Parts holding fewer than this fraction of the cloud's points are merged
/// into the nearest sibling; cuts that would create them are avoided.
pub const SLIVER_FRACTION_3D: f64 = 0.01;
pub const VOXEL_MIN_M: f64 = 0.002;
pub const VOXEL_MAX_M: f64 = 0.010;
pub const VOXELS_PER_DIAGONAL: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub origin: [f64; 3],
    pub voxel_size: f64,
    pub dims: [usize; 3],
    /// Occupied voxel coordinates, sorted.
    pub occupied: Vec<I3>,
    /// Cloud point indices per occupied voxel.
    pub voxel_points: Vec<Vec<usize>>,
    /// Source pixels per occupied voxel.
    pub pixel_backmap: Vec<Vec<Pixel>>,
}

impl VoxelGrid {
    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    /// Extent of the occupied voxels along the camera axis plus one: the
    /// plane every column is extruded to.
    pub fn floor(&self) -> i64 {
        self.occupied.iter().map(|v| v[2]).max().unwrap_or(0) + 1
    }
}

/// Bounding-box diagonal / 64, clamped to [2 mm, 10 mm].
pub fn default_voxel_size(cloud: &PointCloud) -> f64 {
    let (lo, hi) = cloud_bounds(cloud);
    let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt();
    (diag / VOXELS_PER_DIAGONAL).clamp(VOXEL_MIN_M, VOXEL_MAX_M)
}

fn cloud_bounds(cloud: &PointCloud) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &cloud.points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

pub fn voxelize(cloud: &PointCloud, voxel_size: f64) -> Result<VoxelGrid> {
    if cloud.is_empty() {
        return Err(Error::DegeneratePointCloud("empty cloud".into()));
    }
    if voxel_size.is_nan() || voxel_size <= 0.0 {
        return Err(Error::InvalidInput("voxel size must be positive".into()));
    }
    let (lo, hi) = cloud_bounds(cloud);
    let dims = [0, 1, 2].map(|k| ((hi[k] - lo[k]) / voxel_size).floor() as usize + 1);
    let mut map: BTreeMap<I3, (Vec<usize>, Vec<Pixel>)> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let v = [0, 1, 2].map(|k| (((p[k] - lo[k]) / voxel_size).floor() as i64).min(dims[k] as i64 - 1));
        let e = map.entry(v).or_default();
        e.0.push(i);
        e.1.push(cloud.pixel_of[i]);
    }
    let mut occupied = Vec::with_capacity(map.len());
    let mut voxel_points = Vec::with_capacity(map.len());
    let mut pixel_backmap = Vec::with_capacity(map.len());
    for (v, (pts, px)) in map {
        occupied.push(v);
        voxel_points.push(pts);
        pixel_backmap.push(px);
    }
    Ok(VoxelGrid {
        origin: lo,
        voxel_size,
        dims,
        occupied,
        voxel_points,
        pixel_backmap,
    })
}

/// Concavity value plus the worst hull-surface point and its nearest solid
/// voxel, in lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concavity3 {
    pub value: f64,
    pub hull_point: I3,
    pub solid_point: I3,
}

impl Concavity3 {
    fn zero(at: I3) -> Concavity3 {
        Concavity3 {
            value: 0.0,
            hull_point: at,
            solid_point: at,
        }
    }
}

/// Concavity of the whole grid.
pub fn concavity_3d(grid: &VoxelGrid) -> f64 {
    concavity_of(&grid.occupied, grid.floor()).value
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// Concavity of the solid formed by extruding each occupied column of
/// `voxels` to `floor`.
pub fn concavity_of(voxels: &[I3], floor: i64) -> Concavity3 {
    let Some(&first) = voxels.first() else {
        return Concavity3::zero([0, 0, 0]);
    };
    let (mut x0, mut x1, mut y0, mut y1, mut z0) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN, i64::MAX);
    for v in voxels {
        x0 = x0.min(v[0]);
        x1 = x1.max(v[0]);
        y0 = y0.min(v[1]);
        y1 = y1.max(v[1]);
        z0 = z0.min(v[2]);
    }
    let nx = (x1 - x0 + 1) as usize;
    let ny = (y1 - y0 + 1) as usize;
    let nz = (floor - z0 + 1) as usize;
    let mut top = vec![i64::MAX; nx * ny];
    for v in voxels {
        let c = (v[0] - x0) as usize * ny + (v[1] - y0) as usize;
        top[c] = top[c].min(v[2]);
    }
    // hull input: every column top, floor points only under the 2D hull corners
    let cols: Vec<(i64, i64, i64)> = (0..nx * ny)
        .filter(|&c| top[c] != i64::MAX)
        .map(|c| (x0 + (c / ny) as i64, y0 + (c % ny) as i64, top[c]))
        .collect();
    let col_xy: Vec<P2> = cols.iter().map(|&(x, y, _)| P2::new(x as f64, y as f64)).collect();
    let corners = hull_points(&col_xy);
    let mut pts: Vec<I3> = cols.iter().map(|&(x, y, t)| [x, y, t]).collect();
    pts.extend(corners.iter().map(|p| [p.x as i64, p.y as i64, floor]));
    let Some(hull) = int_convex_hull(&pts) else {
        return Concavity3::zero(first);
    };
    let diam = hull.diameter();
    if diam <= 0.0 {
        return Concavity3::zero(first);
    }

    // z interval of hull-interior lattice points per column
    let mut lo = vec![i64::MAX; nx * ny];
    let mut hi = vec![i64::MIN; nx * ny];
    for cx in 0..nx {
        for cy in 0..ny {
            let (x, y) = ((x0 + cx as i64) as i128, (y0 + cy as i64) as i128);
            let (mut zl, mut zh) = (z0 as i128, floor as i128);
            for f in &hull.faces {
                let rhs = f.offset - f.normal[0] * x - f.normal[1] * y;
                let nz_ = f.normal[2];
                if nz_ > 0 {
                    zh = zh.min(floor_div(rhs, nz_));
                } else if nz_ < 0 {
                    zl = zl.max(ceil_div(rhs, nz_));
                } else if rhs < 0 {
                    zl = 1;
                    zh = 0;
                    break;
                }
                if zl > zh {
                    break;
                }
            }
            if zl <= zh {
                lo[cx * ny + cy] = zl as i64;
                hi[cx * ny + cy] = zh as i64;
            }
        }
    }

    let dist2 = solid_edt(&top, nx, ny, nz, z0);
    let inside = |cx: i64, cy: i64, z: i64| -> bool {
        if cx < 0 || cy < 0 || cx >= nx as i64 || cy >= ny as i64 {
            return false;
        }
        let c = cx as usize * ny + cy as usize;
        lo[c] <= z && z <= hi[c]
    };
    let mut best = (-1.0f64, [0i64; 3]);
    for cx in 0..nx {
        for cy in 0..ny {
            let c = cx * ny + cy;
            if lo[c] > hi[c] {
                continue;
            }
            for z in lo[c]..=hi[c] {
                let (ix, iy) = (cx as i64, cy as i64);
                let surface = z == lo[c]
                    || z == hi[c]
                    || !inside(ix - 1, iy, z)
                    || !inside(ix + 1, iy, z)
                    || !inside(ix, iy - 1, z)
                    || !inside(ix, iy + 1, z);
                if !surface {
                    continue;
                }
                let d = dist2[(c * nz) + (z - z0) as usize];
                if d > best.0 {
                    best = (d, [x0 + ix, y0 + iy, z]);
                }
            }
        }
    }
    if best.0 <= 0.0 {
        return Concavity3::zero(first);
    }
    let q = best.1;
    Concavity3 {
        value: best.0.sqrt() / diam,
        hull_point: q,
        solid_point: nearest_solid(&cols, floor, q),
    }
}

fn nearest_solid(cols: &[(i64, i64, i64)], floor: i64, q: I3) -> I3 {
    let mut best = (i64::MAX, q);
    for &(x, y, t) in cols {
        let z = q[2].clamp(t, floor);
        let d = (x - q[0]).pow(2) + (y - q[1]).pow(2) + (z - q[2]).pow(2);
        if d < best.0 {
            best = (d, [x, y, z]);
        }
    }
    best.1
}

const INF: f64 = 1e30;

// Squared Euclidean distance to the nearest solid cell, layout [x][y][z].
fn solid_edt(top: &[i64], nx: usize, ny: usize, nz: usize, z0: i64) -> Vec<f64> {
    let mut g = vec![INF; nx * ny * nz];
    for c in 0..nx * ny {
        if top[c] == i64::MAX {
            continue;
        }
        for z in (top[c] - z0) as usize..nz {
            g[c * nz + z] = 0.0;
        }
    }
    let n = nx.max(ny).max(nz);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut zz = vec![0.0; n + 1];
    // along z
    for c in 0..nx * ny {
        let base = c * nz;
        f[..nz].copy_from_slice(&g[base..base + nz]);
        edt_1d(&f[..nz], &mut d[..nz], &mut v, &mut zz);
        g[base..base + nz].copy_from_slice(&d[..nz]);
    }
    // along y
    for x in 0..nx {
        for z in 0..nz {
            for y in 0..ny {
                f[y] = g[(x * ny + y) * nz + z];
            }
            edt_1d(&f[..ny], &mut d[..ny], &mut v, &mut zz);
            for y in 0..ny {
                g[(x * ny + y) * nz + z] = d[y];
            }
        }
    }
    // along x
    for y in 0..ny {
        for z in 0..nz {
            for x in 0..nx {
                f[x] = g[(x * ny + y) * nz + z];
            }
            edt_1d(&f[..nx], &mut d[..nx], &mut v, &mut zz);
            for x in 0..nx {
                g[(x * ny + y) * nz + z] = d[x];
            }
        }
    }
    g
}

/// Lower envelope of parabolas (Felzenszwalb and Huttenlocher).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let first = f.iter().position(|&x| x < INF);
    let Some(start) = first else {
        d.fill(INF);
        return;
    };
    v[0] = start;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in start + 1..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *out = (q as f64 - p as f64).powi(2) + f[p];
    }
}

struct Node {
    voxels: Vec<usize>,
    concavity: Concavity3,
    children: OnceLock<Option<Box<[Node; 2]>>>,
}

struct Ctx<'a> {
    grid: &'a VoxelGrid,
    floor: i64,
    sliver_points: usize,
}

impl Ctx<'_> {
    fn node(&self, voxels: Vec<usize>) -> Node {
        let coords: Vec<I3> = voxels.iter().map(|&i| self.grid.occupied[i]).collect();
        let concavity = concavity_of(&coords, self.floor);
        Node {
            voxels,
            concavity,
            children: OnceLock::new(),
        }
    }

    fn points_in(&self, voxels: &[usize]) -> usize {
        voxels.iter().map(|&i| self.grid.voxel_points[i].len()).sum()
    }

    fn split(&self, node: &Node) -> Option<Box<[Node; 2]>> {
        if node.voxels.len() < 2 {
            return None;
        }
        let centres: Vec<[f64; 3]> = node
            .voxels
            .iter()
            .map(|&i| self.grid.occupied[i].map(|c| c as f64))
            .collect();
        let q = node.concavity.hull_point.map(|c| c as f64);
        let s = node.concavity.solid_point.map(|c| c as f64);
        let mid = [0, 1, 2].map(|k| 0.5 * (q[k] + s[k]));

        let mut normals: Vec<[f64; 3]> = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        if let Ok(pa) = principal_axes_3d(&centres) {
            normals.extend(pa.axes);
        }
        let off = [0, 1, 2].map(|k| q[k] - s[k]);
        let len = (off[0] * off[0] + off[1] * off[1] + off[2] * off[2]).sqrt();
        if len > 0.0 {
            normals.push(off.map(|c| c / len));
        }
        let mut unique: Vec<[f64; 3]> = Vec::new();
        for n in normals {
            if !unique
                .iter()
                .any(|u| (u[0] * n[0] + u[1] * n[1] + u[2] * n[2]).abs() > 0.999)
            {
                unique.push(n);
            }
        }
        let anchors = [s, q, mid];
        let candidates: Vec<([f64; 3], [f64; 3])> = unique
            .iter()
            .flat_map(|&n| anchors.iter().map(move |&a| (n, a)))
            .collect();

        let best = candidates
            .par_iter()
            .enumerate()
            .filter_map(|(idx, &(n, a))| {
                let (mut left, mut right) = (Vec::new(), Vec::new());
                for (&vi, c) in node.voxels.iter().zip(&centres) {
                    let side = n[0] * (c[0] - a[0]) + n[1] * (c[1] - a[1]) + n[2] * (c[2] - a[2]);
                    if side > 0.0 {
                        left.push(vi);
                    } else {
                        right.push(vi);
                    }
                }
                if left.is_empty() || right.is_empty() {
                    return None;
                }
                let sliver = self.points_in(&left).min(self.points_in(&right)) < self.sliver_points;
                let (na, nb) = (self.node(left), self.node(right));
                let worst = na.concavity.value.max(nb.concavity.value);
                Some(((sliver, worst, idx), [na, nb]))
            })
            .min_by(|x, y| {
                x.0 .0
                    .cmp(&y.0 .0)
                    .then(x.0 .1.total_cmp(&y.0 .1))
                    .then(x.0 .2.cmp(&y.0 .2))
            });
        best.map(|(_, pair)| Box::new(pair))
    }

    fn leaves<'n>(&self, node: &'n Node, gamma: f64, out: &mut Vec<&'n Node>) {
        if node.concavity.value <= gamma {
            out.push(node);
            return;
        }
        match node.children.get_or_init(|| self.split(node)).as_deref() {
            None => out.push(node),
            Some([a, b]) => {
                let (mut la, mut lb) = (Vec::new(), Vec::new());
                rayon::join(|| self.leaves(a, gamma, &mut la), || self.leaves(b, gamma, &mut lb));
                out.extend(la);
                out.extend(lb);
            }
        }
    }
}

/// Lazily expanded split hierarchy over a voxel grid.
pub struct VoxelSplitTree {
    pub grid: VoxelGrid,
    root: Node,
    floor: i64,
    sliver_points: usize,
}

impl VoxelSplitTree {
    pub fn new(grid: VoxelGrid) -> VoxelSplitTree {
        let floor = grid.floor();
        let total: usize = grid.voxel_points.iter().map(Vec::len).sum();
        let sliver_points = (SLIVER_FRACTION_3D * total as f64).ceil() as usize;
        let root = {
            let ctx = Ctx {
                grid: &grid,
                floor,
                sliver_points,
            };
            ctx.node((0..grid.len()).collect())
        };
        VoxelSplitTree {
            grid,
            root,
            floor,
            sliver_points,
        }
    }

    /// Voxel index sets of the leaves at `gamma`, with their concavities.
    pub fn parts(&self, gamma: f64) -> Vec<(Vec<usize>, f64)> {
        let ctx = Ctx {
            grid: &self.grid,
            floor: self.floor,
            sliver_points: self.sliver_points,
        };
        let mut out = Vec::new();
        ctx.leaves(&self.root, gamma, &mut out);
        out.into_iter()
            .map(|n| (n.voxels.clone(), n.concavity.value))
            .collect()
    }
}

/// Decompose a voxel grid into voxel subsets with concavity at most `gamma`.
pub fn decompose_3d(grid: &VoxelGrid, gamma: f64) -> Result<Vec<Vec<usize>>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInput(format!("threshold {gamma} outside (0, 1)")));
    }
    Ok(VoxelSplitTree::new(grid.clone())
        .parts(gamma)
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

/// 3D decomposer for one scene: cloud, voxel tree and the object mask used
/// to place pixels without valid depth.
pub struct Volumetric {
    pub cloud: PointCloud,
    mask: Mask,
    tree: VoxelSplitTree,
}

impl Volumetric {
    pub fn new(cloud: PointCloud, mask: &Mask, voxel_size: Option<f64>) -> Result<Volumetric> {
        let vs = voxel_size.unwrap_or_else(|| default_voxel_size(&cloud));
        let grid = voxelize(&cloud, vs)?;
        Ok(Volumetric {
            cloud,
            mask: mask.clone(),
            tree: VoxelSplitTree::new(grid),
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.tree.grid
    }

    pub fn voxel_size(&self) -> f64 {
        self.tree.grid.voxel_size
    }

    pub fn decompose(&self, gamma: f64) -> Decomposition {
        let grid = &self.tree.grid;
        let leaves = self.tree.parts(gamma);
        let mut groups: Vec<(Vec<usize>, f64)> = leaves
            .into_iter()
            .map(|(voxels, c)| {
                let mut pts: Vec<usize> = voxels
                    .iter()
                    .flat_map(|&v| grid.voxel_points[v].iter().copied())
                    .collect();
                pts.sort_unstable();
                (pts, c)
            })
            .collect();
        merge_small_clouds(&mut groups, &self.cloud, self.tree.sliver_points);

        let (w, h) = self.mask.dims();
        let mut owner = vec![usize::MAX; w * h];
        let mut pixels: Vec<Vec<Pixel>> = vec![Vec::new(); groups.len()];
        for (k, (pts, _)) in groups.iter().enumerate() {
            for &i in pts {
                let (r, c) = self.cloud.pixel_of[i];
                owner[r as usize * w + c as usize] = k;
                pixels[k].push((r, c));
            }
        }
        let outlines: Vec<Polygon> = pixels.iter().map(|px| pixel_hull(px)).collect();
        let centroids: Vec<P2> = outlines.iter().map(Polygon::centroid).collect();
        for (r, c) in self.mask.pixels() {
            if owner[r as usize * w + c as usize] != usize::MAX {
                continue;
            }
            let p = P2::new(c as f64 + 0.5, r as f64 + 0.5);
            let containing: Vec<usize> = (0..outlines.len())
                .filter(|&k| outlines[k].contains(&p))
                .collect();
            let pool: Vec<usize> = if containing.is_empty() {
                (0..outlines.len()).collect()
            } else {
                containing
            };
            let k = pool
                .into_iter()
                .min_by(|&a, &b| {
                    (p - centroids[a])
                        .norm()
                        .total_cmp(&(p - centroids[b]).norm())
                        .then(a.cmp(&b))
                })
                .expect("at least one part");
            pixels[k].push((r, c));
        }
        let parts = groups
            .into_iter()
            .zip(pixels)
            .zip(outlines)
            .map(|(((pts, concavity), mut px), polygon)| {
                px.sort_unstable();
                let cm = cloud_centroid(&self.cloud, &pts);
                ConvexPart {
                    centroid_px: polygon.centroid(),
                    polygon,
                    area_px: px.len(),
                    pixels: px,
                    concavity,
                    cloud: Some(PartCloud {
                        point_count: pts.len(),
                        points: pts,
                        centroid_m: cm,
                    }),
                }
            })
            .collect();
        Decomposition {
            source: Source::ThreeD,
            parts,
            gamma_used: gamma,
            iterations: 0,
            degenerate: false,
        }
    }
}

fn cloud_centroid(cloud: &PointCloud, pts: &[usize]) -> [f64; 3] {
    let n = pts.len().max(1) as f64;
    let mut c = [0.0; 3];
    for &i in pts {
        for (ck, pk) in c.iter_mut().zip(cloud.points[i].iter()) {
            *ck += pk / n;
        }
    }
    c
}

// Fold groups below `min_points` into the sibling with the nearest centroid.
fn merge_small_clouds(groups: &mut Vec<(Vec<usize>, f64)>, cloud: &PointCloud, min_points: usize) {
    while groups.len() > 1 {
        let Some(small) = (0..groups.len())
            .filter(|&g| groups[g].0.len() < min_points)
            .min_by_key(|&g| (groups[g].0.len(), g))
        else {
            return;
        };
        let cs = cloud_centroid(cloud, &groups[small].0);
        let target = (0..groups.len())
            .filter(|&g| g != small)
            .min_by(|&a, &b| {
                let ca = cloud_centroid(cloud, &groups[a].0);
                let cb = cloud_centroid(cloud, &groups[b].0);
                let da: f64 = (0..3).map(|k| (ca[k] - cs[k]).powi(2)).sum();
                let db: f64 = (0..3).map(|k| (cb[k] - cs[k]).powi(2)).sum();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("another group exists");
        let (pts, _) = groups.remove(small);
        let target = if target > small { target - 1 } else { target };
        groups[target].0.extend(pts);
        groups[target].0.sort_unstable();
    }
}

/// Convex hull of the pixel squares.
pub fn pixel_hull(pixels: &[Pixel]) -> Polygon {
    let corners: Vec<P2> = pixels
        .iter()
        .flat_map(|&(r, c)| {
            let (x, y) = (c as f64, r as f64);
            [
                P2::new(x, y),
                P2::new(x + 1.0, y),
                P2::new(x + 1.0, y + 1.0),
                P2::new(x, y + 1.0),
            ]
        })
        .collect();
    let hull = hull_points(&corners);
    Polygon {
        outer: hull,
        holes: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn cloud_of(points: Vec<[f64; 3]>) -> PointCloud {
        let n = points.len();
        PointCloud {
            points: points.into_iter().map(|p| Point3::new(p[0], p[1], p[2])).collect(),
            pixel_of: (0..n as u32).map(|i| (i / 1000, i % 1000)).collect(),
        }
    }

    #[test]
    fn single_point_one_voxel() {
        let g = voxelize(&cloud_of(vec![[0.1, 0.2, 0.5]]), 0.01).unwrap();
        assert_eq!(g.len(), 1);
        assert!(voxelize(&cloud_of(vec![]), 0.01).is_err());
    }

    #[test]
    fn planar_patch_voxel_count() {
        let mut pts = Vec::new();
        for i in 0..50 {
            for j in 0..50 {
                pts.push([0.001 + i as f64 * 0.002, 0.001 + j as f64 * 0.002, 0.5]);
            }
        }
        let g = voxelize(&cloud_of(pts.clone()), 0.01).unwrap();
        // oracle: distinct floor-divided cells
        let lo = [0.001, 0.001, 0.5];
        let mut cells: Vec<(i64, i64)> = pts
            .iter()
            .map(|p| (((p[0] - lo[0]) / 0.01).floor() as i64, ((p[1] - lo[1]) / 0.01).floor() as i64))
            .collect();
        cells.sort();
        cells.dedup();
        assert_eq!(g.len(), cells.len());
        assert!((90..=110).contains(&g.len()));
    }

    fn box_voxels(x: std::ops::Range<i64>, y: std::ops::Range<i64>, z: i64) -> Vec<I3> {
        let mut v = Vec::new();
        for a in x {
            for b in y.clone() {
                v.push([a, b, z]);
            }
        }
        v
    }

    #[test]
    fn box_is_convex() {
        let v = box_voxels(0..10, 0..6, 3);
        assert_eq!(concavity_of(&v, 8).value, 0.0);
    }

    #[test]
    fn dumbbell_is_concave() {
        let mut v = box_voxels(0..12, 0..20, 0);
        v.extend(box_voxels(12..32, 9..11, 0));
        v.extend(box_voxels(32..44, 0..20, 0));
        let c = concavity_of(&v, 4);
        assert!(c.value > 0.15, "{}", c.value);
        // oracle: the neck sits 9 voxels below the hull's long faces
        let diam = ((43.0f64).powi(2) + 19.0f64.powi(2) + 16.0).sqrt();
        assert!((c.value - 9.0 / diam).abs() < 1e-9, "{} vs {}", c.value, 9.0 / diam);
    }

    #[test]
    fn edt_matches_brute_force() {
        let (nx, ny, nz) = (7usize, 5usize, 6usize);
        let mut top = vec![i64::MAX; nx * ny];
        top[3] = 2;
        top[17] = 4;
        top[30] = 5;
        let g = solid_edt(&top, nx, ny, nz, 0);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let mut best = INF;
                    for (c, &t) in top.iter().enumerate() {
                        if t == i64::MAX {
                            continue;
                        }
                        let (sx, sy) = (c / ny, c % ny);
                        for sz in t as usize..nz {
                            let d = (sx as f64 - x as f64).powi(2)
                                + (sy as f64 - y as f64).powi(2)
                                + (sz as f64 - z as f64).powi(2);
                            best = best.min(d);
                        }
                    }
                    assert_eq!(g[(x * ny + y) * nz + z], best);
                }
            }
        }
    }

    #[test]
    fn tee_splits_at_junction() {
        // head across the top, handle down the middle
        let mut v = box_voxels(0..40, 0..8, 0);
        v.extend(box_voxels(16..24, 8..50, 1));
        let mut grid_pts = Vec::new();
        for p in &v {
            grid_pts.push([p[0] as f64 * 0.004 + 0.002, p[1] as f64 * 0.004 + 0.002, p[2] as f64 * 0.004 + 0.002]);
        }
        let cloud = cloud_of(grid_pts);
        let grid = voxelize(&cloud, 0.004).unwrap();
        assert!(concavity_3d(&grid) > 0.2);
        let parts = decompose_3d(&grid, 0.2).unwrap();
        assert_eq!(parts.len(), 2);
        let tree = VoxelSplitTree::new(grid.clone());
        for (vox, c) in tree.parts(0.2) {
            assert!(c <= 0.2 + 1e-9);
            let coords: Vec<I3> = vox.iter().map(|&i| grid.occupied[i]).collect();
            assert!(concavity_of(&coords, grid.floor()).value <= 0.2 + 1e-9);
        }
    }
}
