use std::fs;
use std::path::Path;

use image::{ImageBuffer, Rgb};
use serde::Serialize;

use super::RenderError;

/// RGB float image with per-pixel accumulated opacity, top-left origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    rgb: Vec<f32>,
    alpha: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageMetrics {
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
}

impl Image {
    /// Black, fully transparent image.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![0.0; 3 * width * height],
            alpha: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, color: [f32; 3]) -> Self {
        let mut img = Self::new(width, height);
        for px in img.rgb.chunks_mut(3) {
            px.copy_from_slice(&color);
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[f32] {
        &self.rgb
    }

    pub fn alpha(&self) -> &[f32] {
        &self.alpha
    }

    pub(crate) fn buffers_mut(&mut self) -> (&mut [f32], &mut [f32]) {
        (&mut self.rgb, &mut self.alpha)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, c: [f32; 3]) {
        let i = 3 * (y * self.width + x);
        self.rgb[i..i + 3].copy_from_slice(&c);
    }

    pub fn pixel_alpha(&self, x: usize, y: usize) -> f32 {
        self.alpha[y * self.width + x]
    }

    /// 8-bit RGB, clamped and rounded.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.rgb
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, RenderError> {
        let buf: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .expect("buffer size matches dimensions");
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RenderError> {
        let bytes = self.encode_png()?;
        fs::write(path, bytes).map_err(|source| RenderError::Io {
            path: path.to_owned(),
            source,
        })
    }

    /// Row-major RGB as little-endian f32, no header.
    pub fn encode_raw(&self) -> Vec<u8> {
        self.rgb.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn decode_raw(width: usize, height: usize, bytes: &[u8]) -> Result<Self, RenderError> {
        let expected = 12 * width * height;
        if bytes.len() != expected {
            return Err(RenderError::Payload {
                expected,
                found: bytes.len(),
            });
        }
        let rgb = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self {
            width,
            height,
            rgb,
            alpha: vec![0.0; width * height],
        })
    }

    pub fn save_raw(&self, path: &Path) -> Result<(), RenderError> {
        fs::write(path, self.encode_raw()).map_err(|source| RenderError::Io {
            path: path.to_owned(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip() {
        let mut img = Image::new(3, 2);
        img.set_pixel(2, 1, [0.25, 0.5, 1.0]);
        let back = Image::decode_raw(3, 2, &img.encode_raw()).unwrap();
        assert_eq!(back.rgb(), img.rgb());
        assert!(matches!(
            Image::decode_raw(3, 3, &img.encode_raw()),
            Err(RenderError::Payload {
                expected: 108,
                found: 72
            })
        ));
    }

    #[test]
    fn png_decodes_to_same_bytes() {
        let mut img = Image::filled(4, 3, [1.0, 0.5, 0.0]);
        img.set_pixel(0, 0, [0.2, 0.3, 0.4]);
        let png = img.encode_png().unwrap();
        let decoded = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(decoded.into_raw(), img.to_rgb8());
    }
}
