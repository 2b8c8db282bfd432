//! Baked warp grids.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::mapping::{classify, map_point, PointMap};
use super::{EditSpec, RegionLabel, WarpError};
use crate::geometry::Aabb;

/// Lattice resolution along the longest axis of the bake region.
pub const DEFAULT_WARP_RESOLUTION: usize = 256;

/// Canonical coordinates sampled on a lattice with cubic voxels.
///
/// Stores the displacement `canonical - node` as f32 so identity nodes are
/// exactly zero and precision scales with the displacement, not the position.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpGrid {
    bbox: Aabb,
    dims: [usize; 3],
    spacing: f64,
    resolution: usize,
    displacement: Vec<[f32; 3]>,
    labels: Vec<RegionLabel>,
}

/// Region the bake covers: the outer cage box in continuous mode, the box
/// around both inner cages in discrete mode.
pub fn bake_region(edit: &EditSpec) -> Aabb {
    let cages = edit.cages();
    if edit.mode().is_continuous() {
        *cages.outer.aabb()
    } else {
        cages.inner_deformed.aabb().union(cages.inner_canonical.aabb())
    }
}

/// Lattice layout for `region` at `resolution` nodes along its longest axis.
fn lattice(region: &Aabb, resolution: usize) -> (Aabb, [usize; 3], f64) {
    let extent = region.extent();
    let longest = extent.max();
    let spacing = longest / (resolution - 1) as f64;
    let mut dims = [0usize; 3];
    let mut min = region.min;
    let mut max = region.max;
    for a in 0..3 {
        let cells = if extent[a] >= longest {
            resolution - 1
        } else {
            ((extent[a] / spacing - 1e-9).ceil() as usize).max(1)
        };
        dims[a] = cells + 1;
        let span = cells as f64 * spacing;
        let mid = 0.5 * (region.min[a] + region.max[a]);
        if extent[a] < longest {
            min[a] = mid - 0.5 * span;
            max[a] = mid + 0.5 * span;
        }
    }
    (Aabb::new(min, max), dims, spacing)
}

pub fn bake_warp_grid(edit: &EditSpec, resolution: usize) -> Result<WarpGrid, WarpError> {
    let never = AtomicBool::new(false);
    Ok(bake_warp_grid_cancellable(edit, resolution, &never)?.expect("bake was not cancelled"))
}

/// Bakes in parallel over z-slices. Returns `Ok(None)` if `cancel` is raised
/// before the bake finishes.
pub fn bake_warp_grid_cancellable(
    edit: &EditSpec,
    resolution: usize,
    cancel: &AtomicBool,
) -> Result<Option<WarpGrid>, WarpError> {
    if resolution < 2 {
        return Err(WarpError::Resolution(resolution));
    }
    let (bbox, dims, spacing) = lattice(&bake_region(edit), resolution);
    let slice = dims[0] * dims[1];
    let mut displacement = vec![[0f32; 3]; slice * dims[2]];
    let mut labels = vec![RegionLabel::OutsideOuter; slice * dims[2]];

    displacement
        .par_chunks_mut(slice)
        .zip(labels.par_chunks_mut(slice))
        .enumerate()
        .for_each(|(k, (disp, lab))| {
            if cancel.load(Ordering::Relaxed) {
                return;
            }
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let node = node_position(&bbox, spacing, [i, j, k]);
                    let label = classify(edit.cages(), &node);
                    let map = PointMap::for_region(edit.mode(), label);
                    let canonical = map_point(edit, map, &node);
                    let d = canonical - node;
                    let idx = i + dims[0] * j;
                    disp[idx] = [d.x as f32, d.y as f32, d.z as f32];
                    lab[idx] = label;
                }
            }
        });

    if cancel.load(Ordering::Relaxed) {
        return Ok(None);
    }
    Ok(Some(WarpGrid {
        bbox,
        dims,
        spacing,
        resolution,
        displacement,
        labels,
    }))
}

fn node_position(bbox: &Aabb, spacing: f64, ijk: [usize; 3]) -> Point3<f64> {
    Point3::new(
        bbox.min.x + ijk[0] as f64 * spacing,
        bbox.min.y + ijk[1] as f64 * spacing,
        bbox.min.z + ijk[2] as f64 * spacing,
    )
}

#[derive(Serialize)]
struct WarpHeader {
    dims: [usize; 3],
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    encoding: &'static str,
}

impl WarpGrid {
    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        node_position(&self.bbox, self.spacing, [i, j, k])
    }

    pub fn label(&self, i: usize, j: usize, k: usize) -> RegionLabel {
        self.labels[self.index(i, j, k)]
    }

    pub fn labels(&self) -> &[RegionLabel] {
        &self.labels
    }

    /// Stored canonical point of a node.
    pub fn canonical_node(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        let d = self.displacement[self.index(i, j, k)];
        self.node_position(i, j, k) + Vector3::new(d[0] as f64, d[1] as f64, d[2] as f64)
    }

    /// Trilinearly interpolated canonical point; identity outside the grid.
    pub fn canonical_point(&self, p: &Point3<f64>) -> Point3<f64> {
        if !self.bbox.contains(p) {
            return *p;
        }
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let f = (p[a] - self.bbox.min[a]) / self.spacing;
            let i0 = (f.floor().max(0.0) as usize).min(self.dims[a] - 2);
            base[a] = i0;
            frac[a] = (f - i0 as f64).clamp(0.0, 1.0);
        }
        let mut d = Vector3::zeros();
        for corner in 0..8 {
            let bit = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let w: f64 = (0..3)
                .map(|a| if bit[a] == 1 { frac[a] } else { 1.0 - frac[a] })
                .product();
            if w == 0.0 {
                continue;
            }
            let v = self.displacement[self.index(base[0] + bit[0], base[1] + bit[1], base[2] + bit[2])];
            d += w * Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64);
        }
        p + d
    }

    /// Diagnostics export: JSON header line, then per node three f32le
    /// canonical coordinates followed by one label byte, x-fastest.
    pub fn encode(&self) -> Vec<u8> {
        let header = WarpHeader {
            dims: self.dims,
            bbox_min: [self.bbox.min.x, self.bbox.min.y, self.bbox.min.z],
            bbox_max: [self.bbox.max.x, self.bbox.max.y, self.bbox.max.z],
            encoding: "f32le+u8",
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        out.reserve(13 * self.node_count());
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let c = self.canonical_node(i, j, k);
                    for v in [c.x as f32, c.y as f32, c.z as f32] {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                    out.push(self.label(i, j, k) as u8);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cage::{HexCage, TransformParams};
    use crate::warp::{phi_inner, AdjustmentMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cages() -> (HexCage, HexCage) {
        (
            HexCage::axis_aligned(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap(),
            HexCage::axis_aligned(Point3::new(-0.3, -0.3, -0.3), Point3::new(0.3, 0.3, 0.3)).unwrap(),
        )
    }

    #[test]
    fn identity_bake_stores_node_positions() {
        let (o, i) = cages();
        for mode in [AdjustmentMode::Continuous, AdjustmentMode::DISCRETE_COPY] {
            let e = EditSpec::new(o.clone(), i.clone(), mode).unwrap();
            let g = bake_warp_grid(&e, 9).unwrap();
            let [nx, ny, nz] = g.dims();
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        assert_eq!(g.canonical_node(i, j, k), g.node_position(i, j, k));
                    }
                }
            }
            let p = Point3::new(0.1234, -0.2, 0.05);
            assert_eq!(g.canonical_point(&p), p);
        }
    }

    #[test]
    fn minimal_bake_labels_corners() {
        let (o, i) = cages();
        let e = EditSpec::with_transform(
            o,
            i,
            AdjustmentMode::Continuous,
            TransformParams::translation(Vector3::new(0.2, 0.0, 0.0)),
        )
        .unwrap();
        let g = bake_warp_grid(&e, 2).unwrap();
        assert_eq!(g.dims(), [2, 2, 2]);
        assert!(g
            .labels()
            .iter()
            .all(|l| matches!(l, RegionLabel::OutsideOuter | RegionLabel::Shell)));
        assert!(bake_warp_grid(&e, 1).is_err());
    }

    #[test]
    fn cubic_voxels_cover_region() {
        let region = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.5, 1.0));
        let (bbox, dims, h) = lattice(&region, 65);
        assert_eq!(dims[0], 65);
        assert!((h - 2.0 / 64.0).abs() < 1e-15);
        for a in 0..3 {
            assert!(bbox.min[a] <= region.min[a] + 1e-12 && bbox.max[a] >= region.max[a] - 1e-12);
            assert!(((bbox.max[a] - bbox.min[a]) - (dims[a] - 1) as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_nodes_hold_the_inverse_map() {
        let (o, i) = cages();
        let t = Vector3::new(0.25, -0.1, 0.05);
        let e =
            EditSpec::with_transform(o, i, AdjustmentMode::DISCRETE_EMPTY, TransformParams::translation(t)).unwrap();
        let g = bake_warp_grid(&e, 17).unwrap();
        let [nx, ny, nz] = g.dims();
        let mut seen = 0;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let node = g.node_position(i, j, k);
                    let stored = g.canonical_node(i, j, k);
                    match g.label(i, j, k) {
                        RegionLabel::DeformedInner => {
                            seen += 1;
                            assert!((stored - phi_inner(&e, &node)).norm() < 1e-6);
                        }
                        _ => assert_eq!(stored, node),
                    }
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn bake_is_deterministic() {
        let (o, i) = cages();
        let e = EditSpec::with_transform(
            o,
            i,
            AdjustmentMode::Continuous,
            TransformParams::rotation(Vector3::new(0.2, 0.3, -0.1)),
        )
        .unwrap();
        let a = bake_warp_grid(&e, 20).unwrap();
        let b = bake_warp_grid(&e, 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.encode(), b.encode());
    }

    #[test]
    fn cancelled_bake_returns_none() {
        let (o, i) = cages();
        let e = EditSpec::new(o, i, AdjustmentMode::Continuous).unwrap();
        let cancel = AtomicBool::new(true);
        assert!(bake_warp_grid_cancellable(&e, 16, &cancel).unwrap().is_none());
    }

    #[test]
    fn lookup_converges_for_smooth_edit() {
        let (o, i) = cages();
        let e = EditSpec::with_transform(
            o,
            i,
            AdjustmentMode::Continuous,
            TransformParams::translation(Vector3::new(0.2, 0.1, 0.0)),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let probes: Vec<Point3<f64>> = (0..2000)
            .map(|_| Point3::from(Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0))))
            .collect();
        let err = |r| {
            let g = bake_warp_grid(&e, r).unwrap();
            probes
                .iter()
                .map(|p| {
                    let label = classify(e.cages(), p);
                    let exact = map_point(&e, PointMap::for_region(e.mode(), label), p);
                    let approx = if label == RegionLabel::OutsideOuter {
                        *p
                    } else {
                        g.canonical_point(p)
                    };
                    (exact - approx).norm()
                })
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(16), err(64));
        assert!(fine < coarse, "{fine} vs {coarse}");
    }
}
