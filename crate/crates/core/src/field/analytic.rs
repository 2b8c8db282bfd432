//! Closed-form scenes for tests and demos.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{FieldError, RadianceField, RadianceSample};
use crate::geometry::Aabb;

/// Analytic scene. Every variant except `SmoothBlob` is piecewise constant:
/// exactly zero density outside the shape and the configured density inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticField {
    Sphere {
        center: Point3<f64>,
        radius: f64,
        color: Vector3<f64>,
        density: f64,
    },
    Box {
        min: Point3<f64>,
        max: Point3<f64>,
        color: Vector3<f64>,
        density: f64,
    },
    TwoSpheres {
        centers: [Point3<f64>; 2],
        radii: [f64; 2],
        colors: [Vector3<f64>; 2],
        density: f64,
    },
    /// Checkerboard slab `floor_y - thickness <= y <= floor_y`,
    /// `|x|, |z| <= half_extent`, plus a sphere.
    CheckerFloorPlusSphere {
        floor_y: f64,
        thickness: f64,
        half_extent: f64,
        checker_size: f64,
        floor_colors: [Vector3<f64>; 2],
        sphere_center: Point3<f64>,
        sphere_radius: f64,
        sphere_color: Vector3<f64>,
        density: f64,
    },
    /// Compactly supported bump: with `w = (1 - r^2/R^2)^2` for `r < R`,
    /// density is `peak_density * w` and color is `color * w`.
    SmoothBlob {
        center: Point3<f64>,
        radius: f64,
        color: Vector3<f64>,
        peak_density: f64,
    },
}

#[inline]
fn in_sphere(p: &Point3<f64>, c: &Point3<f64>, r: f64) -> bool {
    (p - c).norm_squared() <= r * r
}

impl AnalyticField {
    pub fn sphere(center: Point3<f64>, radius: f64, color: Vector3<f64>, density: f64) -> Self {
        AnalyticField::Sphere {
            center,
            radius,
            color,
            density,
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let color_ok = |name: &str, c: &Vector3<f64>| {
            if c.iter().all(|v| (0.0..=1.0).contains(v)) {
                Ok(())
            } else {
                Err(FieldError::invalid(name, "channel outside [0, 1]"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FieldError::invalid(name, "must be positive and finite"))
            }
        };
        let density_ok = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FieldError::invalid(name, "must be non-negative and finite"))
            }
        };
        match self {
            AnalyticField::Sphere {
                radius, color, density, ..
            } => {
                positive("radius", *radius)?;
                color_ok("color", color)?;
                density_ok("density", *density)
            }
            AnalyticField::Box {
                min,
                max,
                color,
                density,
            } => {
                if !Aabb::new(*min, *max).is_valid() {
                    return Err(FieldError::invalid("min/max", "min must be below max"));
                }
                color_ok("color", color)?;
                density_ok("density", *density)
            }
            AnalyticField::TwoSpheres {
                radii, colors, density, ..
            } => {
                positive("radii[0]", radii[0])?;
                positive("radii[1]", radii[1])?;
                color_ok("colors[0]", &colors[0])?;
                color_ok("colors[1]", &colors[1])?;
                density_ok("density", *density)
            }
            AnalyticField::CheckerFloorPlusSphere {
                thickness,
                half_extent,
                checker_size,
                floor_colors,
                sphere_radius,
                sphere_color,
                density,
                ..
            } => {
                positive("thickness", *thickness)?;
                positive("half_extent", *half_extent)?;
                positive("checker_size", *checker_size)?;
                positive("sphere_radius", *sphere_radius)?;
                color_ok("floor_colors[0]", &floor_colors[0])?;
                color_ok("floor_colors[1]", &floor_colors[1])?;
                color_ok("sphere_color", sphere_color)?;
                density_ok("density", *density)
            }
            AnalyticField::SmoothBlob {
                radius,
                color,
                peak_density,
                ..
            } => {
                positive("radius", *radius)?;
                color_ok("color", color)?;
                density_ok("peak_density", *peak_density)
            }
        }
    }
}

impl RadianceField for AnalyticField {
    fn query(&self, p: &Point3<f64>, _d: &Vector3<f64>) -> RadianceSample {
        match self {
            AnalyticField::Sphere {
                center,
                radius,
                color,
                density,
            } => {
                if in_sphere(p, center, *radius) {
                    RadianceSample::new(*color, *density)
                } else {
                    RadianceSample::EMPTY
                }
            }
            AnalyticField::Box {
                min,
                max,
                color,
                density,
            } => {
                if Aabb::new(*min, *max).contains(p) {
                    RadianceSample::new(*color, *density)
                } else {
                    RadianceSample::EMPTY
                }
            }
            AnalyticField::TwoSpheres {
                centers,
                radii,
                colors,
                density,
            } => (0..2)
                .find(|&i| in_sphere(p, &centers[i], radii[i]))
                .map_or(RadianceSample::EMPTY, |i| RadianceSample::new(colors[i], *density)),
            AnalyticField::CheckerFloorPlusSphere {
                floor_y,
                thickness,
                half_extent,
                checker_size,
                floor_colors,
                sphere_center,
                sphere_radius,
                sphere_color,
                density,
            } => {
                if in_sphere(p, sphere_center, *sphere_radius) {
                    return RadianceSample::new(*sphere_color, *density);
                }
                let in_slab = p.y <= *floor_y
                    && p.y >= floor_y - thickness
                    && p.x.abs() <= *half_extent
                    && p.z.abs() <= *half_extent;
                if in_slab {
                    let cell = (p.x / checker_size).floor() as i64 + (p.z / checker_size).floor() as i64;
                    RadianceSample::new(floor_colors[cell.rem_euclid(2) as usize], *density)
                } else {
                    RadianceSample::EMPTY
                }
            }
            AnalyticField::SmoothBlob {
                center,
                radius,
                color,
                peak_density,
            } => {
                let q = (p - center).norm_squared() / (radius * radius);
                if q >= 1.0 {
                    return RadianceSample::EMPTY;
                }
                let w = (1.0 - q) * (1.0 - q);
                RadianceSample::new(color * w, peak_density * w)
            }
        }
    }

    fn bounds(&self) -> Option<Aabb> {
        let ball = |c: &Point3<f64>, r: f64| Aabb::new(c - Vector3::repeat(r), c + Vector3::repeat(r));
        Some(match self {
            AnalyticField::Sphere { center, radius, .. } => ball(center, *radius),
            AnalyticField::Box { min, max, .. } => Aabb::new(*min, *max),
            AnalyticField::TwoSpheres { centers, radii, .. } => {
                ball(&centers[0], radii[0]).union(&ball(&centers[1], radii[1]))
            }
            AnalyticField::CheckerFloorPlusSphere {
                floor_y,
                thickness,
                half_extent,
                sphere_center,
                sphere_radius,
                ..
            } => Aabb::new(
                Point3::new(-half_extent, floor_y - thickness, -half_extent),
                Point3::new(*half_extent, *floor_y, *half_extent),
            )
            .union(&ball(sphere_center, *sphere_radius)),
            AnalyticField::SmoothBlob { center, radius, .. } => ball(center, *radius),
        })
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            // max |d/dr (1 - r^2/R^2)^2| = 8 / (3 sqrt(3) R), at r = R / sqrt(3).
            AnalyticField::SmoothBlob {
                radius,
                color,
                peak_density,
                ..
            } => {
                let amplitude = peak_density.max(color.max());
                Some(amplitude * 8.0 / (3.0 * 3f64.sqrt() * radius))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn sphere_center_is_interior() {
        let f = AnalyticField::sphere(Point3::new(1.0, 2.0, 3.0), 0.5, Vector3::new(0.9, 0.1, 0.2), 5.0);
        let s = f.query(&Point3::new(1.0, 2.0, 3.0), &Vector3::x());
        assert_eq!(s, RadianceSample::new(Vector3::new(0.9, 0.1, 0.2), 5.0));
    }

    #[test]
    fn smooth_blob_slope_stays_under_bound() {
        let f = AnalyticField::SmoothBlob {
            center: Point3::origin(),
            radius: 0.8,
            color: Vector3::new(0.8, 0.6, 0.4),
            peak_density: 10.0,
        };
        let bound = f.lipschitz_bound().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..20_000 {
            let p = Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let dir = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let q = p + dir * 1e-4;
            let slope = f.query(&p, &dir).distance(&f.query(&q, &dir)) / 1e-4;
            worst = worst.max(slope);
        }
        assert!(worst <= bound * (1.0 + 1e-6), "{worst} > {bound}");
        // The bound is attained radially at r = R/sqrt(3).
        assert!(worst > 0.9 * bound);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let f = AnalyticField::sphere(Point3::origin(), -1.0, Vector3::zeros(), 1.0);
        assert!(f.validate().is_err());
        let f = AnalyticField::sphere(Point3::origin(), 1.0, Vector3::new(2.0, 0.0, 0.0), 1.0);
        assert!(f.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let f: AnalyticField = serde_json::from_str(
            r#"{"kind":"two-spheres","centers":[[0,0,0],[1,0,0]],"radii":[0.2,0.3],
                "colors":[[1,0,0],[0,0,1]],"density":4}"#,
        )
        .unwrap();
        assert!(f.validate().is_ok());
        assert_eq!(f.query(&Point3::new(1.0, 0.1, 0.0), &Vector3::x()).color, Vector3::z());
    }
}
