use super::{Camera, Image};
use crate::cage::{HexCage, EDGES};

/// Rasterizes the 12 cage edges over `img`, one-pixel lines. Edge segments
/// behind the camera are clipped at the near plane.
pub fn draw_cage(img: &mut Image, camera: &Camera, cage: &HexCage, color: [f32; 3]) {
    const NEAR: f64 = 1e-6;
    for &(a, b) in EDGES.iter() {
        let (pa, pb) = (cage.vertex(a), cage.vertex(b));
        let (ca, cb) = (camera.to_camera_space(&pa), camera.to_camera_space(&pb));
        // Clip to z <= -NEAR.
        let (mut s0, mut s1) = (0.0, 1.0);
        let (za, zb) = (ca.z + NEAR, cb.z + NEAR);
        if za > 0.0 && zb > 0.0 {
            continue;
        }
        if za > 0.0 {
            s0 = za / (za - zb);
        } else if zb > 0.0 {
            s1 = za / (za - zb);
        }
        let p0 = pa + s0 * (pb - pa);
        let p1 = pa + s1 * (pb - pa);
        let (Some(q0), Some(q1)) = (camera.project(&p0), camera.project(&p1)) else {
            continue;
        };
        draw_line(img, q0, q1, color);
    }
}

fn draw_line(img: &mut Image, a: (f64, f64), b: (f64, f64), color: [f32; 3]) {
    let len = (b.0 - a.0).abs().max((b.1 - a.1).abs());
    let steps = (len.ceil() as usize).clamp(1, 1 << 16);
    for k in 0..=steps {
        let s = k as f64 / steps as f64;
        let x = a.0 + s * (b.0 - a.0);
        let y = a.1 + s * (b.1 - a.1);
        if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set_pixel(x as usize, y as usize, color);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix4, Point3};

    #[test]
    fn wireframe_touches_projected_corners() {
        let cam = Camera::new(Matrix4::identity(), 1.0, 64, 64).unwrap();
        let cage = HexCage::axis_aligned(Point3::new(-0.5, -0.5, -4.0), Point3::new(0.5, 0.5, -3.0)).unwrap();
        let mut img = Image::new(64, 64);
        draw_cage(&mut img, &cam, &cage, [1.0, 0.0, 0.0]);
        for v in cage.vertices() {
            let (x, y) = cam.project(v).unwrap();
            assert_eq!(img.pixel(x as usize, y as usize), [1.0, 0.0, 0.0]);
        }
        assert_eq!(img.pixel(32, 32), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn cage_behind_camera_draws_nothing() {
        let cam = Camera::new(Matrix4::identity(), 1.0, 16, 16).unwrap();
        let cage = HexCage::axis_aligned(Point3::new(-0.5, -0.5, 2.0), Point3::new(0.5, 0.5, 3.0)).unwrap();
        let mut img = Image::new(16, 16);
        draw_cage(&mut img, &cam, &cage, [1.0; 3]);
        assert_eq!(img, Image::new(16, 16));
    }
}
