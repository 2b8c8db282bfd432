//! Ray / bilinear-patch intersection.

use nalgebra::{Point3, Vector3};

/// Patch parameters this far outside `[0, 1]` still count as a hit, so rays
/// through shared edges are not lost.
const PARAM_TOLERANCE: f64 = 1e-9;

/// Ray parameters `s` where `origin + s * dir` meets the bilinear patch
/// through `corners = [p00, p10, p01, p11]`.
///
/// Projecting the patch equation onto two directions perpendicular to the ray
/// leaves two bilinear equations in the patch parameters `(a, b)`;
/// eliminating `b` gives a quadratic in `a`.
pub(crate) fn ray_bilinear_patch(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    corners: &[Point3<f64>; 4],
    scale: f64,
) -> [Option<f64>; 2] {
    let len2 = dir.norm_squared();
    if len2 == 0.0 || !len2.is_finite() {
        return [None, None];
    }
    let r = dir / len2.sqrt();
    let helper = if r.x.abs() < 0.6 { Vector3::x() } else { Vector3::y() };
    let n1 = r.cross(&helper).normalize();
    let n2 = r.cross(&n1);

    let [p00, p10, p01, p11] = corners;
    let a = p00 - origin;
    let b = p10 - p00;
    let c = p01 - p00;
    let e = (p11 - p10) - (p01 - p00);

    let proj = |n: &Vector3<f64>| (n.dot(&a), n.dot(&b), n.dot(&c), n.dot(&e));
    let (a1, b1, c1, e1) = proj(&n1);
    let (a2, b2, c2, e2) = proj(&n2);

    // (a2 + u b2)(c1 + u e1) - (a1 + u b1)(c2 + u e2) = 0
    let qa = b2 * e1 - b1 * e2;
    let qb = a2 * e1 + b2 * c1 - a1 * e2 - b1 * c2;
    let qc = a2 * c1 - a1 * c2;
    let tiny = 1e-14 * scale * scale;

    let mut out = [None, None];
    for (slot, u) in out.iter_mut().zip(solve_quadratic(qa, qb, qc, tiny)) {
        let Some(u) = u else { continue };
        if !(-PARAM_TOLERANCE..=1.0 + PARAM_TOLERANCE).contains(&u) {
            continue;
        }
        let d1 = c1 + u * e1;
        let d2 = c2 + u * e2;
        let v = if d1.abs() >= d2.abs() {
            if d1.abs() <= tiny {
                continue;
            }
            -(a1 + u * b1) / d1
        } else {
            -(a2 + u * b2) / d2
        };
        if !(-PARAM_TOLERANCE..=1.0 + PARAM_TOLERANCE).contains(&v) {
            continue;
        }
        let hit = a + b * u + c * v + e * (u * v);
        let s = hit.dot(&r);
        // Reject spurious roots whose point is off the ray.
        if (hit - r * s).norm() > 1e-7 * scale.max(1e-300) {
            continue;
        }
        *slot = Some(s / len2.sqrt());
    }
    out
}

fn solve_quadratic(qa: f64, qb: f64, qc: f64, tiny: f64) -> [Option<f64>; 2] {
    if qa.abs() <= tiny {
        if qb.abs() <= tiny {
            return [None, None];
        }
        return [Some(-qc / qb), None];
    }
    let mut disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        if disc > -tiny * tiny {
            disc = 0.0;
        } else {
            return [None, None];
        }
    }
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    if q == 0.0 {
        return [Some(0.0), None];
    }
    [Some(q / qa), Some(qc / q)]
}
