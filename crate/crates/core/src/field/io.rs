//! Grid field file format and scene loading.
//!
//! A grid file is one line of compact JSON header followed by a binary
//! payload: `nx*ny*nz` little-endian f32 densities, then `nx*ny*nz` RGB
//! triples (also f32le), both x-fastest.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnalyticField, GridField, RadianceField};
use crate::geometry::Aabb;

pub const GRID_ENCODING: &str = "f32le";

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload mismatch for {field}: expected {expected} values, found {found}")]
    PayloadMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl FieldError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        FieldError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        FieldError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Header line of a grid file. Field order here fixes the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub dims: [usize; 3],
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
    pub encoding: String,
}

impl GridHeader {
    pub fn node_count(&self) -> Option<usize> {
        self.dims[0].checked_mul(self.dims[1])?.checked_mul(self.dims[2])
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::new(self.bbox_min.into(), self.bbox_max.into())
    }
}

/// Splits `bytes` at the first newline and parses the JSON header before it.
pub fn split_header<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<(T, &[u8]), FieldError> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FieldError::Header("missing newline after header".into()))?;
    let header = serde_json::from_slice(&bytes[..nl]).map_err(|e| FieldError::Header(e.to_string()))?;
    Ok((header, &bytes[nl + 1..]))
}

pub fn decode_grid(bytes: &[u8]) -> Result<GridField, FieldError> {
    let (header, payload): (GridHeader, _) = split_header(bytes)?;
    if header.encoding != GRID_ENCODING {
        return Err(FieldError::Header(format!(
            "field `encoding`: expected \"{GRID_ENCODING}\", found {:?}",
            header.encoding
        )));
    }
    if header.dims.iter().any(|&n| n < 2) {
        return Err(FieldError::Header(format!(
            "field `dims`: every axis needs at least 2 nodes, found {:?}",
            header.dims
        )));
    }
    let count = header
        .node_count()
        .ok_or_else(|| FieldError::Header("field `dims`: node count overflows".into()))?;
    if payload.len() % 4 != 0 {
        return Err(FieldError::Header(format!(
            "payload length {} is not a multiple of 4 bytes",
            payload.len()
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if values.len() != 4 * count {
        let field = if values.len() < count { "density" } else { "color" };
        let (expected, found) = if field == "density" {
            (count, values.len())
        } else {
            (3 * count, values.len() - count)
        };
        return Err(FieldError::PayloadMismatch { field, expected, found });
    }
    let (densities, rgb) = values.split_at(count);
    let colors = rgb.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    GridField::new(header.bbox(), header.dims, densities.to_vec(), colors)
}

pub fn encode_grid(grid: &GridField) -> Vec<u8> {
    let bbox = grid.bbox();
    let header = GridHeader {
        dims: grid.dims(),
        bbox_min: [bbox.min.x, bbox.min.y, bbox.min.z],
        bbox_max: [bbox.max.x, bbox.max.y, bbox.max.z],
        encoding: GRID_ENCODING.to_string(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(16 * grid.densities().len());
    for d in grid.densities() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for c in grid.colors() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn load_grid_field(path: impl AsRef<Path>) -> Result<GridField, FieldError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| FieldError::io(path, e))?;
    decode_grid(&bytes)
}

pub fn save_grid_field(grid: &GridField, path: impl AsRef<Path>) -> Result<(), FieldError> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| FieldError::io(path, e))?;
    f.write_all(&encode_grid(grid)).map_err(|e| FieldError::io(path, e))
}

/// Loads either a grid file or an analytic scene description (a JSON
/// document such as `{"kind": "sphere", ...}`).
pub fn load_scene(path: impl AsRef<Path>) -> Result<Arc<dyn RadianceField>, FieldError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| FieldError::io(path, e))?;
    let first_line = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let is_grid = serde_json::from_slice::<serde_json::Value>(first_line)
        .ok()
        .and_then(|v| v.get("encoding").cloned())
        .is_some();
    if is_grid {
        Ok(Arc::new(decode_grid(&bytes)?))
    } else {
        let field: AnalyticField = serde_json::from_slice(&bytes).map_err(|e| FieldError::Header(e.to_string()))?;
        field.validate()?;
        Ok(Arc::new(field))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn minimal_bytes(values: usize) -> Vec<u8> {
        let mut out =
            br#"{"dims":[2,2,2],"bbox_min":[0.0,0.0,0.0],"bbox_max":[1.0,1.0,1.0],"encoding":"f32le"}"#.to_vec();
        out.push(b'\n');
        for i in 0..values {
            let v = if i < 8 { i as f32 } else { 0.25f32 };
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    #[test]
    fn minimal_grid_loads() {
        let g = decode_grid(&minimal_bytes(32)).unwrap();
        assert_eq!(g.dims(), [2, 2, 2]);
        assert_eq!(g.densities()[7], 7.0);
    }

    #[test]
    fn short_density_payload_is_rejected() {
        let err = decode_grid(&minimal_bytes(7)).unwrap_err();
        match err {
            FieldError::PayloadMismatch { field, expected, found } => {
                assert_eq!((field, expected, found), ("density", 8, 7));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_header_names_field() {
        let mut bytes = minimal_bytes(32);
        bytes.splice(0..0, b"x".iter().copied());
        assert!(matches!(decode_grid(&bytes), Err(FieldError::Header(_))));

        let bad = br#"{"dims":[2,2,2],"bbox_min":[0,0,0],"bbox_max":[1,1,1],"encoding":"f16"}"#;
        let mut bytes = bad.to_vec();
        bytes.push(b'\n');
        let err = decode_grid(&bytes).unwrap_err();
        assert!(err.to_string().contains("encoding"), "{err}");
    }

    #[test]
    fn non_finite_value_is_named() {
        let mut bytes = minimal_bytes(32);
        let at = bytes.len() - 4 * 32 + 4 * 9;
        bytes[at..at + 4].copy_from_slice(&f32::INFINITY.to_le_bytes());
        let err = decode_grid(&bytes).unwrap_err();
        assert!(err.to_string().contains("color[0]"), "{err}");
    }

    #[test]
    fn save_of_load_is_byte_identical() {
        let bytes = minimal_bytes(32);
        let g = decode_grid(&bytes).unwrap();
        assert_eq!(encode_grid(&g), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.grid");
        save_grid_field(&g, &path).unwrap();
        let again = load_grid_field(&path).unwrap();
        assert_eq!(again, g);
        assert_eq!(fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn load_scene_detects_format() {
        let dir = tempfile::tempdir().unwrap();
        let grid_path = dir.path().join("scene.grid");
        fs::write(&grid_path, minimal_bytes(32)).unwrap();
        let f = load_scene(&grid_path).unwrap();
        assert!(f.bounds().is_some());

        let json_path = dir.path().join("sphere.json");
        fs::write(
            &json_path,
            r#"{"kind":"sphere","center":[0,0,0],"radius":0.5,"color":[1,0,0],"density":5}"#,
        )
        .unwrap();
        let f = load_scene(&json_path).unwrap();
        let s = f.query(&Point3::origin(), &nalgebra::Vector3::z());
        assert_eq!(s.density, 5.0);

        assert!(matches!(
            load_scene(dir.path().join("missing.grid")),
            Err(FieldError::Io { .. })
        ));
    }
}
