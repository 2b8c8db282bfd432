//! Region classification and the transformed-to-canonical point maps.

use log::debug;
use nalgebra::{Matrix3, Point3, Vector3};

use super::{AdjustmentMode, EditSpec, InnerMapping, RegionLabel};
use crate::cage::CagePair;

/// Below this length `J * d` is treated as degenerate.
const DIRECTION_FLOOR: f64 = 1e-9;

pub fn classify(pair: &CagePair, p: &Point3<f64>) -> RegionLabel {
    if !pair.outer.aabb().contains(p) {
        return RegionLabel::OutsideOuter;
    }
    if pair.inner_deformed.contains(p) {
        RegionLabel::DeformedInner
    } else if pair.inner_canonical.contains(p) {
        RegionLabel::CanonicalInnerOnly
    } else if pair.outer.contains(p) {
        RegionLabel::Shell
    } else {
        RegionLabel::OutsideOuter
    }
}

/// Pulls a point of the deformed inner cage back to canonical space. Also
/// defined slightly outside the cage (the affine or trilinear extension).
pub fn phi_inner(edit: &EditSpec, p: &Point3<f64>) -> Point3<f64> {
    match edit.mapping() {
        InnerMapping::Identity => *p,
        InnerMapping::Affine(map) => map.apply_inverse(p),
        InnerMapping::Trilinear => {
            let cages = edit.cages();
            let sol = cages.inner_deformed.solve_trilinear(p);
            if sol.converged {
                cages.inner_canonical.trilinear_point(&sol.uvw)
            } else {
                debug!("phi_inner: inverse did not converge at {p:?}, using identity");
                *p
            }
        }
    }
}

/// Shell blend: along the ray from the deformed inner cage's center through
/// `p`, the displacement at the inner surface hit decays linearly to zero at
/// the outer surface hit.
pub fn phi_shell(edit: &EditSpec, p: &Point3<f64>) -> Point3<f64> {
    if edit.is_identity() {
        return *p;
    }
    let cages = edit.cages();
    let (q_in, q_out) = shell_segment(cages, p);
    let span = (q_out - q_in).norm();
    let t = if span > 0.0 {
        ((p - q_in).norm() / span).clamp(0.0, 1.0)
    } else {
        1.0
    };
    p + (1.0 - t) * (phi_inner(edit, &q_in) - q_in)
}

/// Surface hits on the deformed inner cage and on the outer cage.
fn shell_segment(cages: &CagePair, p: &Point3<f64>) -> (Point3<f64>, Point3<f64>) {
    let inner = &cages.inner_deformed;
    let center = inner.center();
    let dir = p - center;
    if dir.norm_squared() == 0.0 {
        return (*p, cages.outer.nearest_face_point(p));
    }
    let q_in = match inner.ray_hits(&center, &dir, 0.0).first() {
        Some(&s) => center + dir * s,
        None => {
            debug!("phi_shell: no inner surface hit toward {p:?}, projecting to nearest face");
            inner.nearest_face_point(p)
        }
    };
    let outer_hits = cages.outer.ray_hits(&center, &dir, 0.0);
    let q_out = match outer_hits.iter().find(|&&s| s >= 1.0 - 1e-12).or(outer_hits.last()) {
        Some(&s) => center + dir * s,
        None => {
            debug!("phi_shell: no outer surface hit toward {p:?}, projecting to nearest face");
            cages.outer.nearest_face_point(p)
        }
    };
    (q_in, q_out)
}

/// The point map active for a region under an edit's mode; `None` when the
/// region is emptied (discrete move/delete of the vacated cage).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMap {
    Identity,
    Inner,
    Shell,
    Empty,
}

impl PointMap {
    pub fn for_region(mode: AdjustmentMode, label: RegionLabel) -> PointMap {
        use super::Fill;
        match (mode, label) {
            (_, RegionLabel::OutsideOuter) => PointMap::Identity,
            (_, RegionLabel::DeformedInner) => PointMap::Inner,
            (AdjustmentMode::Continuous, _) => PointMap::Shell,
            (AdjustmentMode::Discrete { .. }, RegionLabel::Shell) => PointMap::Identity,
            (AdjustmentMode::Discrete { fill: Fill::Empty }, RegionLabel::CanonicalInnerOnly) => PointMap::Empty,
            (AdjustmentMode::Discrete { fill: Fill::Original }, RegionLabel::CanonicalInnerOnly) => PointMap::Identity,
        }
    }
}

/// Exact canonical point of `p` under `map`. `Empty` maps to identity.
pub fn map_point(edit: &EditSpec, map: PointMap, p: &Point3<f64>) -> Point3<f64> {
    match map {
        PointMap::Identity | PointMap::Empty => *p,
        PointMap::Inner => phi_inner(edit, p),
        PointMap::Shell => phi_shell(edit, p),
    }
}

/// Canonical direction: `normalize(J d)` with `J` the Jacobian of the active
/// point map at `p`. Analytic for identity and whole-cage transforms inside
/// the inner cage, central differences with step `fd_step` otherwise.
pub fn phi_direction(edit: &EditSpec, map: PointMap, p: &Point3<f64>, d: &Vector3<f64>, fd_step: f64) -> Vector3<f64> {
    let jac = match (map, edit.mapping()) {
        (PointMap::Identity | PointMap::Empty, _) | (_, InnerMapping::Identity) => return *d,
        (PointMap::Inner, InnerMapping::Affine(a)) => a.inverse_linear(),
        _ => central_difference(|q| map_point(edit, map, q), p, fd_step),
    };
    push_direction(&jac, d)
}

pub(crate) fn push_direction(jac: &Matrix3<f64>, d: &Vector3<f64>) -> Vector3<f64> {
    let v = jac * d;
    let n = v.norm();
    if n < DIRECTION_FLOOR || !n.is_finite() {
        debug!("phi_direction: degenerate Jacobian, keeping the direction");
        *d
    } else {
        v / n
    }
}

pub(crate) fn central_difference(f: impl Fn(&Point3<f64>) -> Point3<f64>, p: &Point3<f64>, h: f64) -> Matrix3<f64> {
    let mut jac = Matrix3::zeros();
    for a in 0..3 {
        let e = Vector3::ith(a, h);
        let col = (f(&(p + e)) - f(&(p - e))) / (2.0 * h);
        jac.set_column(a, &col);
    }
    jac
}
