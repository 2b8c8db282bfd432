#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use cagewarp_core::render::Camera;
use cagewarp_core::{Point3, Vector3};
use serde_json::{json, Value};

pub fn two_spheres_json() -> Value {
    json!({
        "kind": "two-spheres",
        "centers": [[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]],
        "radii": [0.3, 0.3],
        "colors": [[0.9, 0.2, 0.2], [0.2, 0.3, 0.9]],
        "density": 8.0
    })
}

pub fn box_corners(min: [f64; 3], max: [f64; 3]) -> Value {
    let v: Vec<[f64; 3]> = (0..8)
        .map(|i| {
            let pick = |a: usize| if (i >> a) & 1 == 1 { max[a] } else { min[a] };
            [pick(0), pick(1), pick(2)]
        })
        .collect();
    json!(v)
}

/// Outer cage around the right sphere, inner cage tight on it.
pub fn right_sphere_cages() -> Value {
    json!({
        "outer": box_corners([0.05, -0.6, -0.6], [1.0, 0.6, 0.6]),
        "inner": box_corners([0.15, -0.35, -0.35], [0.85, 0.35, 0.35]),
    })
}

pub fn front_camera(w: usize, h: usize) -> Camera {
    Camera::look_at(Point3::new(0.0, 0.0, 3.0), Point3::origin(), Vector3::y(), 0.9, w, h).unwrap()
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    p
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_cagewarp"))
}
