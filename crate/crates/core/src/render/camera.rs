use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::integrate::Ray;
use super::RenderError;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// Pinhole camera looking down its local -z axis with +y up.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pose: Matrix4<f64>,
    fov_x: f64,
    width: usize,
    height: usize,
}

/// Single-camera JSON: `transform` is the camera-to-world matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    pub fov_x: f64,
    pub width: usize,
    pub height: usize,
    pub transform: [f64; 16],
}

/// Multi-frame camera file in the common `transforms.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPath {
    pub camera_angle_x: f64,
    #[serde(rename = "w")]
    pub width: usize,
    #[serde(rename = "h")]
    pub height: usize,
    pub frames: Vec<PathFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFrame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_path: Option<String>,
    pub transform_matrix: [[f64; 4]; 4],
}

impl Camera {
    pub fn new(pose: Matrix4<f64>, fov_x: f64, width: usize, height: usize) -> Result<Self, RenderError> {
        if !(fov_x > 0.0 && fov_x < std::f64::consts::PI) {
            return Err(RenderError::Camera(format!("fov_x {fov_x} outside (0, pi)")));
        }
        if width == 0 || height == 0 {
            return Err(RenderError::Camera(format!("resolution {width}x{height} is empty")));
        }
        if !pose.iter().all(|v| v.is_finite()) {
            return Err(RenderError::Camera("pose has non-finite entries".into()));
        }
        let r: Matrix3<f64> = pose.fixed_view::<3, 3>(0, 0).into();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > ORTHONORMAL_TOL || r.determinant() < 0.0 {
            return Err(RenderError::Camera(format!(
                "pose rotation is not a proper orthonormal matrix (error {err:.3e})"
            )));
        }
        if pose.fixed_view::<1, 4>(3, 0) != Matrix4::<f64>::identity().fixed_view::<1, 4>(3, 0) {
            return Err(RenderError::Camera("pose bottom row must be 0 0 0 1".into()));
        }
        Ok(Self {
            pose,
            fov_x,
            width,
            height,
        })
    }

    /// Camera at `eye` looking at `target`.
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        fov_x: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, RenderError> {
        let back = (eye - target).normalize();
        let right = up.cross(&back);
        if right.norm() < 1e-12 || !back.iter().all(|v| v.is_finite()) {
            return Err(RenderError::Camera("look_at: view direction parallel to up".into()));
        }
        let right = right.normalize();
        let true_up = back.cross(&right);
        let mut pose = Matrix4::identity();
        pose.fixed_view_mut::<3, 1>(0, 0).copy_from(&right);
        pose.fixed_view_mut::<3, 1>(0, 1).copy_from(&true_up);
        pose.fixed_view_mut::<3, 1>(0, 2).copy_from(&back);
        pose.fixed_view_mut::<3, 1>(0, 3).copy_from(&eye.coords);
        Self::new(pose, fov_x, width, height)
    }

    pub fn pose(&self) -> &Matrix4<f64> {
        &self.pose
    }

    pub fn fov_x(&self) -> f64 {
        self.fov_x
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn position(&self) -> Point3<f64> {
        Point3::new(self.pose[(0, 3)], self.pose[(1, 3)], self.pose[(2, 3)])
    }

    fn rotation(&self) -> Matrix3<f64> {
        self.pose.fixed_view::<3, 3>(0, 0).into()
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.width as f64 / (0.5 * self.fov_x).tan()
    }

    /// Same pose and field of view at another resolution.
    pub fn with_resolution(&self, width: usize, height: usize) -> Result<Self, RenderError> {
        Self::new(self.pose, self.fov_x, width, height)
    }

    /// Ray through continuous image coordinates `(x, y)`, top-left origin;
    /// pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)`.
    pub fn ray_at(&self, x: f64, y: f64) -> Ray {
        let f = self.focal();
        let local = Vector3::new(
            (x - 0.5 * self.width as f64) / f,
            -(y - 0.5 * self.height as f64) / f,
            -1.0,
        );
        Ray {
            origin: self.position(),
            direction: (self.rotation() * local).normalize(),
        }
    }

    /// Ray through pixel `(px, py)` at sub-pixel `offset` in `[0, 1)^2`.
    pub fn generate_ray(&self, px: usize, py: usize, offset: (f64, f64)) -> Ray {
        self.ray_at(px as f64 + offset.0, py as f64 + offset.1)
    }

    /// Continuous image coordinates of `p`, or `None` behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64)> {
        let local = self.rotation().transpose() * (p - self.position());
        if local.z >= -1e-12 {
            return None;
        }
        let f = self.focal();
        Some((
            0.5 * self.width as f64 + f * local.x / -local.z,
            0.5 * self.height as f64 - f * local.y / -local.z,
        ))
    }

    /// Point in camera space (x right, y up, -z forward).
    pub fn to_camera_space(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation().transpose() * (p - self.position())
    }

    pub fn to_file(&self) -> CameraFile {
        let mut transform = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                transform[4 * r + c] = self.pose[(r, c)];
            }
        }
        CameraFile {
            fov_x: self.fov_x,
            width: self.width,
            height: self.height,
            transform,
        }
    }

    pub fn from_file(file: &CameraFile) -> Result<Self, RenderError> {
        Self::new(
            Matrix4::from_row_slice(&file.transform),
            file.fov_x,
            file.width,
            file.height,
        )
    }
}

impl CameraPath {
    pub fn cameras(&self) -> Result<Vec<Camera>, RenderError> {
        self.frames
            .iter()
            .map(|f| {
                let rows: Vec<f64> = f.transform_matrix.iter().flatten().copied().collect();
                Camera::new(
                    Matrix4::from_row_slice(&rows),
                    self.camera_angle_x,
                    self.width,
                    self.height,
                )
            })
            .collect()
    }
}

/// Reads either a single-camera file or a multi-frame camera path.
pub fn load_cameras(path: &Path) -> Result<Vec<Camera>, RenderError> {
    let text = fs::read_to_string(path).map_err(|source| RenderError::Io {
        path: path.to_owned(),
        source,
    })?;
    let json_err = |source| RenderError::Json {
        path: path.to_owned(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    if value.get("frames").is_some() {
        let file: CameraPath = serde_json::from_value(value).map_err(json_err)?;
        file.cameras()
    } else {
        let file: CameraFile = serde_json::from_value(value).map_err(json_err)?;
        Ok(vec![Camera::from_file(&file)?])
    }
}
