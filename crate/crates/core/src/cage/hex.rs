use log::debug;
use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::intersect::ray_bilinear_patch;
use super::transform::{AffineMap, TransformParams};
use super::CageError;
use crate::geometry::{is_finite_point, Aabb};

pub const MAX_NEWTON_ITERATIONS: usize = 20;

/// Trilinear coordinates this far outside `[0, 1]` still count as inside.
const INSIDE_TOLERANCE: f64 = 1e-9;
/// Newton stops once the residual is below this fraction of the diameter.
const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// A finished solve counts as converged below this fraction of the diameter.
const ACCEPT_TOLERANCE: f64 = 1e-9;
/// Relative floor for the Jacobian determinant in validity checks.
const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// The 12 edges as vertex index pairs: four along u, four along v, four along w.
pub const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// A drag handle: one corner or one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handle {
    Corner(usize),
    Edge(usize),
}

/// One face of a cage: the bilinear patch where trilinear coordinate `axis`
/// equals `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CageFace {
    pub axis: usize,
    pub side: usize,
}

impl CageFace {
    pub fn all() -> impl Iterator<Item = CageFace> {
        (0..3).flat_map(|axis| (0..2).map(move |side| CageFace { axis, side }))
    }

    /// The two free trilinear axes, in increasing order.
    pub fn free_axes(&self) -> (usize, usize) {
        match self.axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    fn uvw(&self, a: f64, b: f64) -> Vector3<f64> {
        let (fa, fb) = self.free_axes();
        let mut uvw = Vector3::zeros();
        uvw[self.axis] = self.side as f64;
        uvw[fa] = a;
        uvw[fb] = b;
        uvw
    }

    /// Patch corners ordered `(a, b)`: (0,0), (1,0), (0,1), (1,1).
    fn corner_indices(&self) -> [usize; 4] {
        let (fa, fb) = self.free_axes();
        let base = self.side << self.axis;
        [base, base | 1 << fa, base | 1 << fb, base | 1 << fa | 1 << fb]
    }
}

/// Result of the Newton inverse of the trilinear map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSolution {
    /// Unclamped trilinear coordinates of the last iterate.
    pub uvw: Vector3<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl NewtonSolution {
    pub fn is_inside(&self) -> bool {
        self.converged
            && self
                .uvw
                .iter()
                .all(|&c| (-INSIDE_TOLERANCE..=1.0 + INSIDE_TOLERANCE).contains(&c))
    }
}

/// Eight-cornered hexahedral cage with trilinear geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Point3<f64>; 8]", into = "[Point3<f64>; 8]")]
pub struct HexCage {
    vertices: [Point3<f64>; 8],
    aabb: Aabb,
    diameter: f64,
}

impl TryFrom<[Point3<f64>; 8]> for HexCage {
    type Error = CageError;
    fn try_from(vertices: [Point3<f64>; 8]) -> Result<Self, CageError> {
        HexCage::new(vertices)
    }
}

impl From<HexCage> for [Point3<f64>; 8] {
    fn from(cage: HexCage) -> Self {
        cage.vertices
    }
}

#[inline]
fn corner_bits(i: usize) -> [f64; 3] {
    [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]
}

impl HexCage {
    /// Builds and validates a cage.
    pub fn new(vertices: [Point3<f64>; 8]) -> Result<Self, CageError> {
        let cage = Self::new_unchecked(vertices);
        cage.validate()?;
        Ok(cage)
    }

    fn new_unchecked(vertices: [Point3<f64>; 8]) -> Self {
        let aabb = Aabb::from_points(&vertices);
        let mut diameter: f64 = 0.0;
        for i in 0..8 {
            for j in i + 1..8 {
                diameter = diameter.max((vertices[i] - vertices[j]).norm());
            }
        }
        Self {
            vertices,
            aabb,
            diameter,
        }
    }

    /// Box cage spanning `min..max`.
    pub fn axis_aligned(min: Point3<f64>, max: Point3<f64>) -> Result<Self, CageError> {
        let vertices = std::array::from_fn(|i| {
            let b = corner_bits(i);
            Point3::new(
                if b[0] == 0.0 { min.x } else { max.x },
                if b[1] == 0.0 { min.y } else { max.y },
                if b[2] == 0.0 { min.z } else { max.z },
            )
        });
        Self::new(vertices)
    }

    /// Unit cube `[0, 1]^3`.
    pub fn unit() -> Self {
        Self::axis_aligned(Point3::origin(), Point3::new(1.0, 1.0, 1.0)).expect("unit cube is valid")
    }

    pub fn vertices(&self) -> &[Point3<f64>; 8] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point3<f64> {
        self.vertices[i]
    }

    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Arithmetic mean of the eight vertices.
    pub fn center(&self) -> Point3<f64> {
        let sum = self.vertices.iter().fold(Vector3::zeros(), |acc, v| acc + v.coords);
        Point3::from(sum / 8.0)
    }

    pub fn trilinear_point(&self, uvw: &Vector3<f64>) -> Point3<f64> {
        let (u, v, w) = (uvw.x, uvw.y, uvw.z);
        let lerp = |a: &Point3<f64>, b: &Point3<f64>, t: f64| a.coords * (1.0 - t) + b.coords * t;
        let x00 = lerp(&self.vertices[0], &self.vertices[1], u);
        let x10 = lerp(&self.vertices[2], &self.vertices[3], u);
        let x01 = lerp(&self.vertices[4], &self.vertices[5], u);
        let x11 = lerp(&self.vertices[6], &self.vertices[7], u);
        let y0 = x00 * (1.0 - v) + x10 * v;
        let y1 = x01 * (1.0 - v) + x11 * v;
        Point3::from(y0 * (1.0 - w) + y1 * w)
    }

    /// Columns are the partial derivatives along u, v, w.
    pub fn jacobian(&self, uvw: &Vector3<f64>) -> Matrix3<f64> {
        let x = &self.vertices;
        let (u, v, w) = (uvw.x, uvw.y, uvw.z);
        let (iu, iv, iw) = (1.0 - u, 1.0 - v, 1.0 - w);
        let du = (x[1] - x[0]) * iv * iw + (x[3] - x[2]) * v * iw + (x[5] - x[4]) * iv * w + (x[7] - x[6]) * v * w;
        let dv = (x[2] - x[0]) * iu * iw + (x[3] - x[1]) * u * iw + (x[6] - x[4]) * iu * w + (x[7] - x[5]) * u * w;
        let dw = (x[4] - x[0]) * iu * iv + (x[5] - x[1]) * u * iv + (x[6] - x[2]) * iu * v + (x[7] - x[3]) * u * v;
        Matrix3::from_columns(&[du, dv, dw])
    }

    pub fn validate(&self) -> Result<(), CageError> {
        if !self.vertices.iter().all(is_finite_point) {
            return Err(CageError::NonFinite);
        }
        let floor = DEGENERACY_TOLERANCE * self.diameter.powi(3);
        let samples = (0..8)
            .map(|i| (Vector3::from(corner_bits(i)), format!("corner {i}")))
            .chain(std::iter::once((Vector3::repeat(0.5), "center".to_string())));
        for (uvw, location) in samples {
            let det = self.jacobian(&uvw).determinant();
            if !(det > floor) {
                return Err(CageError::Degenerate { location, det });
            }
        }
        Ok(())
    }

    /// Maps every vertex `v` to `center + M (v - center)`.
    pub fn transform(&self, params: &TransformParams) -> Result<HexCage, CageError> {
        params.validate()?;
        let map = AffineMap::about_center(params, &self.center());
        self.map_affine(&map)
    }

    pub fn map_affine(&self, map: &AffineMap) -> Result<HexCage, CageError> {
        HexCage::new(self.vertices.map(|v| map.apply(&v)))
    }

    /// Displaces one corner, or both endpoints of one edge, by `delta`.
    pub fn deform(&self, handle: Handle, delta: &Vector3<f64>) -> Result<HexCage, CageError> {
        if !delta.iter().all(|c| c.is_finite()) {
            return Err(CageError::NonFinite);
        }
        let mut vertices = self.vertices;
        match handle {
            Handle::Corner(i) if i < 8 => vertices[i] += delta,
            Handle::Edge(e) if e < 12 => {
                let (a, b) = EDGES[e];
                vertices[a] += delta;
                vertices[b] += delta;
            }
            Handle::Corner(i) => return Err(CageError::InvalidHandle(format!("corner {i} (expected 0..8)"))),
            Handle::Edge(e) => return Err(CageError::InvalidHandle(format!("edge {e} (expected 0..12)"))),
        }
        HexCage::new(vertices)
    }

    /// Newton's method on `trilinear_point(uvw) = p`, started from the
    /// bounding-box normalized coordinates of `p`.
    pub fn solve_trilinear(&self, p: &Point3<f64>) -> NewtonSolution {
        let extent = self.aabb.extent();
        let mut uvw = Vector3::from_fn(|a, _| (p[a] - self.aabb.min[a]) / extent[a]);
        let stop = RESIDUAL_TOLERANCE * self.diameter;
        let volume_scale = self.jacobian(&Vector3::repeat(0.5)).determinant().abs();
        let mut iterations = 0;
        let mut residual = (self.trilinear_point(&uvw) - p).norm();
        while residual > stop && iterations < MAX_NEWTON_ITERATIONS {
            let jac = self.jacobian(&uvw);
            let det = jac.determinant();
            let Some(inv) = jac.try_inverse() else {
                break;
            };
            let mut step = inv * (self.trilinear_point(&uvw) - p);
            if det.abs() < 1e-12 * volume_scale {
                step *= 0.5;
            }
            uvw -= step;
            iterations += 1;
            if !uvw.iter().all(|c| c.is_finite()) {
                break;
            }
            residual = (self.trilinear_point(&uvw) - p).norm();
            if step.norm() < 1e-15 {
                break;
            }
        }
        let converged = residual.is_finite() && residual <= ACCEPT_TOLERANCE * self.diameter;
        if !converged {
            debug!("trilinear inverse did not converge after {iterations} iterations (residual {residual:.3e})");
        }
        NewtonSolution {
            uvw,
            iterations,
            converged,
        }
    }

    /// Trilinear coordinates of `p`, or `None` when `p` is outside the cage
    /// (including when Newton fails to converge).
    pub fn inverse_trilinear(&self, p: &Point3<f64>) -> Option<Vector3<f64>> {
        if !self.aabb.inflated(INSIDE_TOLERANCE * self.diameter).contains(p) {
            return None;
        }
        let sol = self.solve_trilinear(p);
        sol.is_inside().then(|| sol.uvw.map(|c| c.clamp(0.0, 1.0)))
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        self.inverse_trilinear(p).is_some()
    }

    /// Inside with every trilinear coordinate at least `margin` from 0 and 1.
    pub fn contains_strictly(&self, p: &Point3<f64>, margin: f64) -> bool {
        if !self.aabb.contains(p) {
            return false;
        }
        let sol = self.solve_trilinear(p);
        sol.converged && sol.uvw.iter().all(|&c| c > margin && c < 1.0 - margin)
    }

    /// Point and outward unit normal at face coordinates `(a, b)`.
    pub fn face_point_normal(&self, face: CageFace, a: f64, b: f64) -> (Point3<f64>, Vector3<f64>) {
        let uvw = face.uvw(a, b);
        let jac = self.jacobian(&uvw);
        let (fa, fb) = face.free_axes();
        let mut n = jac.column(fa).cross(&jac.column(fb));
        let across = jac.column(face.axis).into_owned();
        let outward = if face.side == 1 { across } else { -across };
        if n.dot(&outward) < 0.0 {
            n = -n;
        }
        (self.trilinear_point(&uvw), n.normalize())
    }

    /// Ray parameters `s > min_s` at which `origin + s * dir` crosses the
    /// cage surface, sorted ascending.
    pub fn ray_hits(&self, origin: &Point3<f64>, dir: &Vector3<f64>, min_s: f64) -> Vec<f64> {
        let mut hits = Vec::new();
        for face in CageFace::all() {
            let c = face.corner_indices().map(|i| self.vertices[i]);
            for s in ray_bilinear_patch(origin, dir, &c, self.diameter).into_iter().flatten() {
                if s > min_s {
                    hits.push(s);
                }
            }
        }
        hits.sort_by(f64::total_cmp);
        hits
    }

    /// Surface point reached by pushing the trilinear coordinates of `p` onto
    /// the nearest face.
    pub fn nearest_face_point(&self, p: &Point3<f64>) -> Point3<f64> {
        let mut uvw = self
            .solve_trilinear(p)
            .uvw
            .map(|c| if c.is_finite() { c.clamp(0.0, 1.0) } else { 0.5 });
        let (axis, side) = (0..3)
            .flat_map(|a| [(a, 0usize), (a, 1usize)])
            .min_by(|x, y| {
                let dx = (uvw[x.0] - x.1 as f64).abs();
                let dy = (uvw[y.0] - y.1 as f64).abs();
                dx.total_cmp(&dy)
            })
            .expect("six faces");
        uvw[axis] = side as f64;
        self.trilinear_point(&uvw)
    }

    /// World-space endpoints of edge `e`.
    pub fn edge(&self, e: usize) -> (Point3<f64>, Point3<f64>) {
        let (a, b) = EDGES[e];
        (self.vertices[a], self.vertices[b])
    }

    /// Cage scaled about its own center by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<HexCage, CageError> {
        self.transform(&TransformParams::scale(Vector3::repeat(factor)))
    }
}
