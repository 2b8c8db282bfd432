//! Pinhole cameras, emission-absorption ray marching, images and metrics.

mod camera;
mod image;
mod integrate;
mod metrics;
mod overlay;

pub use camera::{load_cameras, Camera, CameraFile, CameraPath, PathFrame};
pub use image::{Image, ImageMetrics};
pub use integrate::{integrate_ray, render, render_cancellable, trace_pixel, Ray, RayResult, RenderSettings};
pub use metrics::{alpha_centroid, discontinuity_energy, image_metrics, straddle_pairs};
pub use overlay::draw_cage;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("invalid render settings: {0}")]
    Settings(String),
    #[error("image size mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("raw image payload has {found} bytes, expected {expected}")]
    Payload { expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("png encoding failed: {0}")]
    Png(#[from] ::image::ImageError),
}
