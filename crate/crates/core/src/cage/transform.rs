//! Composite translate/rotate/scale transforms, applied about a cage center.

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::CageError;

/// Translation, rotation (radians, right-handed, counterclockwise about each
/// axis) and per-axis scale. Composed as `T * Rx * Ry * Rz * S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformParams {
    pub translation: Vector3<f64>,
    pub rotation: Vector3<f64>,
    pub scale: Vector3<f64>,
}

impl Default for TransformParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransformParams {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: Vector3::zeros(),
            scale: Vector3::repeat(1.0),
        }
    }

    pub fn translation(t: Vector3<f64>) -> Self {
        Self {
            translation: t,
            ..Self::identity()
        }
    }

    pub fn rotation(angles: Vector3<f64>) -> Self {
        Self {
            rotation: angles,
            ..Self::identity()
        }
    }

    pub fn scale(s: Vector3<f64>) -> Self {
        Self {
            scale: s,
            ..Self::identity()
        }
    }

    pub fn validate(&self) -> Result<(), CageError> {
        let all = self
            .translation
            .iter()
            .chain(self.rotation.iter())
            .chain(self.scale.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(CageError::InvalidParams("non-finite component".into()));
        }
        if self.scale.iter().any(|&s| s <= 0.0) {
            return Err(CageError::InvalidParams(format!(
                "scale factors must be positive, got {:?}",
                self.scale.as_slice()
            )));
        }
        Ok(())
    }
}

pub fn rotation_x(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rotation_y(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotation_z(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rx * Ry * Rz`.
pub fn rotation_block(angles: &Vector3<f64>) -> Matrix3<f64> {
    rotation_x(angles.x) * rotation_y(angles.y) * rotation_z(angles.z)
}

/// Homogeneous `T * Rx * Ry * Rz * S`.
pub fn build_transform(params: &TransformParams) -> Matrix4<f64> {
    let linear = rotation_block(&params.rotation) * Matrix3::from_diagonal(&params.scale);
    let mut m = linear.to_homogeneous();
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&params.translation);
    m
}

/// Homogeneous inverse `S^-1 * Rz^T * Ry^T * Rx^T * T^-1`, built factor by
/// factor rather than by general inversion.
pub fn build_inverse_transform(params: &TransformParams) -> Matrix4<f64> {
    let linear_inv =
        Matrix3::from_diagonal(&params.scale.map(|s| 1.0 / s)) * rotation_block(&params.rotation).transpose();
    let mut m = linear_inv.to_homogeneous();
    m.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&(-(linear_inv * params.translation)));
    m
}

/// An affine map together with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub forward: Matrix4<f64>,
    pub inverse: Matrix4<f64>,
}

impl AffineMap {
    pub fn identity() -> Self {
        Self {
            forward: Matrix4::identity(),
            inverse: Matrix4::identity(),
        }
    }

    /// `x -> center + M (x - center)` with `M = build_transform(params)`.
    pub fn about_center(params: &TransformParams, center: &Point3<f64>) -> Self {
        let to = Matrix4::new_translation(&center.coords);
        let from = Matrix4::new_translation(&(-center.coords));
        Self {
            forward: to * build_transform(params) * from,
            inverse: to * build_inverse_transform(params) * from,
        }
    }

    /// `self` applied first, then `next`.
    pub fn then(&self, next: &AffineMap) -> Self {
        Self {
            forward: next.forward * self.forward,
            inverse: self.inverse * next.inverse,
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        self.forward.transform_point(p)
    }

    pub fn apply_inverse(&self, p: &Point3<f64>) -> Point3<f64> {
        self.inverse.transform_point(p)
    }

    /// Linear part of the inverse, i.e. the Jacobian of `apply_inverse`.
    pub fn inverse_linear(&self) -> Matrix3<f64> {
        self.inverse.fixed_view::<3, 3>(0, 0).into_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_params_give_identity() {
        assert_eq!(build_transform(&TransformParams::identity()), Matrix4::identity());
        assert_eq!(
            build_inverse_transform(&TransformParams::identity()),
            Matrix4::identity()
        );
    }

    #[test]
    fn translation_moves_origin() {
        let m = build_transform(&TransformParams::translation(Vector3::new(1.0, 2.0, 3.0)));
        assert_eq!(m.transform_point(&Point3::origin()), Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn quarter_turn_about_z_is_counterclockwise() {
        let m = build_transform(&TransformParams::rotation(Vector3::new(0.0, 0.0, FRAC_PI_2)));
        let p = m.transform_point(&Point3::new(1.0, 0.0, 0.0));
        assert!((p - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn combined_matches_explicit_product() {
        let params = TransformParams {
            translation: Vector3::new(1.0, 0.0, 0.0),
            rotation: Vector3::new(0.0, 0.0, FRAC_PI_2),
            scale: Vector3::repeat(2.0),
        };
        // Oracle: the three factors written out by hand.
        #[rustfmt::skip]
        let t = Matrix4::new(
            1.0, 0.0, 0.0, 1.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0);
        let (s, c) = FRAC_PI_2.sin_cos();
        #[rustfmt::skip]
        let rz = Matrix4::new(
            c,  -s,  0.0, 0.0,
            s,   c,  0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0);
        let sc = Matrix4::new_scaling(2.0).map_with_location(|i, j, v| if i == 3 && j == 3 { 1.0 } else { v });
        let oracle = (t * rz * sc).transform_point(&Point3::new(1.0, 0.0, 0.0));
        let got = build_transform(&params).transform_point(&Point3::new(1.0, 0.0, 0.0));
        assert!((got - oracle).norm() < 1e-15);
        assert!((got - Point3::new(1.0, 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn validate_rejects_nonpositive_scale() {
        assert!(TransformParams::scale(Vector3::new(0.0, 1.0, 1.0)).validate().is_err());
        assert!(TransformParams::scale(Vector3::new(1.0, -1.0, 1.0)).validate().is_err());
        let mut p = TransformParams::identity();
        p.translation.x = f64::NAN;
        assert!(p.validate().is_err());
    }
}
