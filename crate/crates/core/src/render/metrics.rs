use nalgebra::{Point3, Vector3};

use super::{Image, ImageMetrics, RenderError};
use crate::cage::{CageFace, HexCage};
use crate::field::RadianceField;

/// Channelwise mean and max absolute difference.
pub fn image_metrics(a: &Image, b: &Image) -> Result<ImageMetrics, RenderError> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(RenderError::DimensionMismatch {
            a: (a.width(), a.height()),
            b: (b.width(), b.height()),
        });
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (x, y) in a.rgb().iter().zip(b.rgb()) {
        let d = (*x as f64 - *y as f64).abs();
        sum += d;
        max = max.max(d);
    }
    let n = a.rgb().len().max(1) as f64;
    Ok(ImageMetrics {
        mean_abs_diff: sum / n,
        max_abs_diff: max,
    })
}

/// Opacity-weighted centroid in continuous image coordinates (pixel centers at
/// `i + 0.5`). `None` for a fully transparent image.
pub fn alpha_centroid(img: &Image) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let w = img.pixel_alpha(x, y) as f64;
            sx += w * (x as f64 + 0.5);
            sy += w * (y as f64 + 0.5);
            sw += w;
        }
    }
    (sw > 0.0).then(|| (sx / sw, sy / sw))
}

/// Probe points on every face of `cage`: a `per_axis x per_axis` grid of
/// cell-centered face parameters, each paired with the outward normal.
pub fn straddle_pairs(cage: &HexCage, per_axis: usize) -> Vec<(Point3<f64>, Vector3<f64>)> {
    let mut out = Vec::with_capacity(6 * per_axis * per_axis);
    for face in CageFace::all() {
        for i in 0..per_axis {
            for j in 0..per_axis {
                let a = (i as f64 + 0.5) / per_axis as f64;
                let b = (j as f64 + 0.5) / per_axis as f64;
                out.push(cage.face_point_normal(face, a, b));
            }
        }
    }
    out
}

/// Mean of `|sample(p + eps n) - sample(p - eps n)|` (largest component of
/// the difference over density and color) across the faces of `surfaces`.
pub fn discontinuity_energy<F: RadianceField + ?Sized>(
    field: &F,
    surfaces: &[&HexCage],
    eps: f64,
    per_axis: usize,
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for cage in surfaces {
        for (p, n) in straddle_pairs(cage, per_axis) {
            let plus = field.query(&(p + eps * n), &n);
            let minus = field.query(&(p - eps * n), &n);
            sum += plus.distance(&minus);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;

    #[test]
    fn metrics_arithmetic() {
        let a = Image::new(10, 10);
        assert_eq!(
            image_metrics(&a, &a).unwrap(),
            ImageMetrics {
                mean_abs_diff: 0.0,
                max_abs_diff: 0.0
            }
        );
        let white = Image::filled(10, 10, [1.0; 3]);
        let m = image_metrics(&a, &white).unwrap();
        assert_eq!((m.mean_abs_diff, m.max_abs_diff), (1.0, 1.0));
        let mut b = a.clone();
        b.set_pixel(4, 7, [0.5, 0.0, 0.0]);
        let m = image_metrics(&a, &b).unwrap();
        assert!((m.mean_abs_diff - 0.5 / 300.0).abs() < 1e-15);
        assert_eq!(m.max_abs_diff, 0.5);
        assert!(image_metrics(&a, &Image::new(10, 9)).is_err());
    }

    #[test]
    fn centroid_of_a_block() {
        let mut img = Image::new(8, 8);
        let (_, alpha) = img.buffers_mut();
        for y in 2..4 {
            for x in 5..8 {
                alpha[y * 8 + x] = 1.0;
            }
        }
        assert_eq!(alpha_centroid(&img), Some((6.5, 3.0)));
        assert_eq!(alpha_centroid(&Image::new(3, 3)), None);
    }

    #[test]
    fn smooth_field_energy_is_bounded() {
        let f = AnalyticField::SmoothBlob {
            center: Point3::origin(),
            radius: 1.0,
            color: Vector3::new(0.5, 0.5, 0.5),
            peak_density: 4.0,
        };
        let cage = HexCage::axis_aligned(Point3::new(-0.4, -0.3, -0.2), Point3::new(0.5, 0.3, 0.6)).unwrap();
        let eps = 1e-4;
        let e = discontinuity_energy(&f, &[&cage], eps, 6);
        assert!(e <= f.lipschitz_bound().unwrap() * 2.0 * eps);
        assert!(e > 0.0);
    }

    #[test]
    fn sharp_field_jump_is_detected() {
        let f = AnalyticField::Box {
            min: Point3::new(-1.0, -1.0, -1.0),
            max: Point3::new(1.0, 1.0, 1.0),
            color: Vector3::new(1.0, 1.0, 1.0),
            density: 3.0,
        };
        let same = HexCage::axis_aligned(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap();
        assert!((discontinuity_energy(&f, &[&same], 1e-4, 4) - 3.0).abs() < 1e-12);
    }
}
