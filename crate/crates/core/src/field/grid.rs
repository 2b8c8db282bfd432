use nalgebra::{Point3, Vector3};

use super::{FieldError, RadianceField, RadianceSample};
use crate::geometry::Aabb;

/// Node fractions this close to an integer snap onto the node so lookups at
/// lattice nodes reproduce the stored value exactly.
const NODE_SNAP: f64 = 1e-9;

/// Dense voxel grid with view-independent color.
///
/// Node `(i, j, k)` sits at `bbox.min + (i, j, k) * extent / (dims - 1)`, so the
/// outermost nodes lie on the box faces. Storage is x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    bbox: Aabb,
    dims: [usize; 3],
    densities: Vec<f32>,
    colors: Vec<[f32; 3]>,
}

impl GridField {
    pub fn new(bbox: Aabb, dims: [usize; 3], densities: Vec<f32>, colors: Vec<[f32; 3]>) -> Result<Self, FieldError> {
        if !bbox.is_valid() {
            return Err(FieldError::invalid("bbox", "min must be below max on every axis"));
        }
        if let Some(axis) = dims.iter().position(|&n| n < 2) {
            return Err(FieldError::invalid(
                "dims",
                format!("axis {axis} has {} nodes, need at least 2", dims[axis]),
            ));
        }
        let count = dims[0]
            .checked_mul(dims[1])
            .and_then(|n| n.checked_mul(dims[2]))
            .ok_or_else(|| FieldError::invalid("dims", "node count overflows"))?;
        if densities.len() != count {
            return Err(FieldError::PayloadMismatch {
                field: "density",
                expected: count,
                found: densities.len(),
            });
        }
        if colors.len() != count {
            return Err(FieldError::PayloadMismatch {
                field: "color",
                expected: 3 * count,
                found: 3 * colors.len(),
            });
        }
        if let Some(i) = densities.iter().position(|d| !d.is_finite()) {
            return Err(FieldError::invalid(format!("density[{i}]"), "value is not finite"));
        }
        if let Some(i) = densities.iter().position(|&d| d < 0.0) {
            return Err(FieldError::invalid(format!("density[{i}]"), "value is negative"));
        }
        if let Some(i) = colors.iter().position(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(FieldError::invalid(format!("color[{i}]"), "value is not finite"));
        }
        if let Some(i) = colors.iter().position(|c| c.iter().any(|v| !(0.0..=1.0).contains(v))) {
            return Err(FieldError::invalid(format!("color[{i}]"), "channel outside [0, 1]"));
        }
        Ok(Self {
            bbox,
            dims,
            densities,
            colors,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        bbox: Aabb,
        dims: [usize; 3],
        f: impl Fn(&Point3<f64>) -> RadianceSample,
    ) -> Result<Self, FieldError> {
        let count = dims.iter().product();
        let mut densities = Vec::with_capacity(count);
        let mut colors = Vec::with_capacity(count);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let s = f(&node_position(&bbox, dims, [i, j, k]));
                    densities.push(s.density as f32);
                    colors.push([s.color.x as f32, s.color.y as f32, s.color.z as f32]);
                }
            }
        }
        Self::new(bbox, dims, densities, colors)
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn densities(&self) -> &[f32] {
        &self.densities
    }

    pub fn colors(&self) -> &[[f32; 3]] {
        &self.colors
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        node_position(&self.bbox, self.dims, [i, j, k])
    }

    /// Stored sample at a lattice node.
    pub fn node(&self, i: usize, j: usize, k: usize) -> RadianceSample {
        let idx = self.index(i, j, k);
        let c = self.colors[idx];
        RadianceSample::new(
            Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64),
            self.densities[idx] as f64,
        )
    }

    fn sample(&self, p: &Point3<f64>) -> RadianceSample {
        if !self.bbox.contains(p) {
            return RadianceSample::EMPTY;
        }
        let extent = self.bbox.extent();
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let cells = (self.dims[a] - 1) as f64;
            let mut f = (p[a] - self.bbox.min[a]) / extent[a] * cells;
            let r = f.round();
            if (f - r).abs() < NODE_SNAP {
                f = r;
            }
            let i0 = (f.floor().max(0.0) as usize).min(self.dims[a] - 2);
            base[a] = i0;
            frac[a] = (f - i0 as f64).clamp(0.0, 1.0);
        }

        let mut density = 0.0;
        let mut color = Vector3::zeros();
        for corner in 0..8 {
            let bit = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            for a in 0..3 {
                w *= if bit[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let idx = self.index(base[0] + bit[0], base[1] + bit[1], base[2] + bit[2]);
            let c = self.colors[idx];
            density += w * self.densities[idx] as f64;
            color += w * Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64);
        }
        RadianceSample::new(color, density)
    }

    /// Per-axis maximum of |node difference| / spacing over density and color.
    fn axis_slopes(&self) -> [f64; 3] {
        let mut slopes = [0f64; 3];
        let extent = self.bbox.extent();
        let [nx, ny, nz] = self.dims;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let here = self.node(i, j, k);
                    let next = [
                        (i + 1 < nx).then(|| self.node(i + 1, j, k)),
                        (j + 1 < ny).then(|| self.node(i, j + 1, k)),
                        (k + 1 < nz).then(|| self.node(i, j, k + 1)),
                    ];
                    for a in 0..3 {
                        if let Some(n) = next[a] {
                            let h = extent[a] / (self.dims[a] - 1) as f64;
                            slopes[a] = slopes[a].max(here.distance(&n) / h);
                        }
                    }
                }
            }
        }
        slopes
    }

    fn boundary_is_empty(&self) -> bool {
        let [nx, ny, nz] = self.dims;
        (0..nz).all(|k| {
            (0..ny).all(|j| {
                (0..nx).all(|i| {
                    let on_face = i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
                    !on_face || self.node(i, j, k).distance(&RadianceSample::EMPTY) == 0.0
                })
            })
        })
    }
}

pub(crate) fn node_position(bbox: &Aabb, dims: [usize; 3], ijk: [usize; 3]) -> Point3<f64> {
    let extent = bbox.extent();
    Point3::from(Vector3::from_fn(|a, _| {
        bbox.min[a] + ijk[a] as f64 * (extent[a] / (dims[a] - 1) as f64)
    }))
}

impl RadianceField for GridField {
    fn query(&self, p: &Point3<f64>, _d: &Vector3<f64>) -> RadianceSample {
        self.sample(p)
    }

    fn bounds(&self) -> Option<Aabb> {
        Some(self.bbox)
    }

    /// Trilinear data is Lipschitz inside the box; across the box faces it is
    /// only continuous when the boundary nodes are empty.
    fn lipschitz_bound(&self) -> Option<f64> {
        if !self.boundary_is_empty() {
            return None;
        }
        let s = self.axis_slopes();
        Some((s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt())
    }
}
