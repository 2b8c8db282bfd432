use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Camera, Image, RenderError};
use crate::field::{RadianceField, RadianceSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + t * self.direction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub samples_per_ray: usize,
    pub near: f64,
    pub far: f64,
    pub background: [f64; 3],
    pub stratified_jitter: bool,
    pub seed: u64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            samples_per_ray: 128,
            near: 0.1,
            far: 10.0,
            background: [1.0, 1.0, 1.0],
            stratified_jitter: false,
            seed: 0,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.samples_per_ray < 2 {
            return Err(RenderError::Settings(format!(
                "samples_per_ray must be at least 2, got {}",
                self.samples_per_ray
            )));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(RenderError::Settings(format!(
                "need 0 < near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        if !self.background.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(RenderError::Settings("background channels must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Composited result of one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayResult {
    pub color: Vector3<f64>,
    /// Accumulated opacity, `sum T_i alpha_i`.
    pub alpha: f64,
    /// Transmittance left after the last sample.
    pub transmittance: f64,
    /// Whether transmittance never increased from one sample to the next.
    pub monotone: bool,
}

/// Emission-absorption quadrature with `samples_per_ray` stratified samples
/// on `[near, far]`. Sample `i` sits at `near + (i + u_i) * step` with
/// `u_i = 0` unless jitter is on, and covers the segment up to the next sample
/// (the last one up to `far`, the first one back to `near`).
pub fn integrate_ray(
    query: impl Fn(&Point3<f64>, &Vector3<f64>) -> RadianceSample,
    ray: &Ray,
    settings: &RenderSettings,
    rng: Option<&mut ChaCha8Rng>,
) -> RayResult {
    let n = settings.samples_per_ray;
    let step = (settings.far - settings.near) / n as f64;
    let mut ts = Vec::with_capacity(n + 1);
    match rng {
        Some(rng) if settings.stratified_jitter => {
            ts.extend((0..n).map(|i| settings.near + (i as f64 + rng.gen::<f64>()) * step));
        }
        _ => ts.extend((0..n).map(|i| settings.near + i as f64 * step)),
    }
    ts.push(settings.far);

    let mut color = Vector3::zeros();
    let mut transmittance = 1.0;
    let mut alpha_sum = 0.0;
    let mut monotone = true;
    for i in 0..n {
        let sample = query(&ray.at(ts[i]), &ray.direction);
        if sample.density <= 0.0 {
            continue;
        }
        let start = if i == 0 { settings.near } else { ts[i] };
        let delta = ts[i + 1] - start;
        let alpha = 1.0 - (-sample.density * delta).exp();
        let weight = transmittance * alpha;
        color += weight * sample.color;
        alpha_sum += weight;
        let next = transmittance - weight;
        monotone &= next <= transmittance;
        transmittance = next;
    }
    color += transmittance * Vector3::from(settings.background);
    RayResult {
        color,
        alpha: alpha_sum,
        transmittance,
        monotone,
    }
}

/// Seeds one pixel's jitter stream from the render seed and pixel index.
fn pixel_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Traces the center ray of pixel `(x, y)`.
pub fn trace_pixel<F: RadianceField + ?Sized>(
    field: &F,
    camera: &Camera,
    settings: &RenderSettings,
    x: usize,
    y: usize,
) -> RayResult {
    let ray = camera.generate_ray(x, y, (0.5, 0.5));
    let bounds = field.bounds();
    let query = |p: &Point3<f64>, d: &Vector3<f64>| match &bounds {
        Some(b) if !b.contains(p) => RadianceSample::EMPTY,
        _ => field.query(p, d),
    };
    let mut rng = pixel_rng(settings.seed, (y * camera.width() + x) as u64);
    integrate_ray(query, &ray, settings, Some(&mut rng))
}

pub fn render<F: RadianceField + ?Sized>(
    field: &F,
    camera: &Camera,
    settings: &RenderSettings,
) -> Result<Image, RenderError> {
    let never = AtomicBool::new(false);
    Ok(render_cancellable(field, camera, settings, &never)?.expect("render was not cancelled"))
}

/// Renders row-parallel. Returns `Ok(None)` once `cancel` is observed.
pub fn render_cancellable<F: RadianceField + ?Sized>(
    field: &F,
    camera: &Camera,
    settings: &RenderSettings,
    cancel: &AtomicBool,
) -> Result<Option<Image>, RenderError> {
    settings.validate()?;
    let (w, h) = (camera.width(), camera.height());
    let mut image = Image::new(w, h);
    let (rgb, alpha) = image.buffers_mut();
    rgb.par_chunks_mut(3 * w)
        .zip(alpha.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row, arow))| {
            if cancel.load(Ordering::Relaxed) {
                return;
            }
            for x in 0..w {
                let r = trace_pixel(field, camera, settings, x, y);
                for c in 0..3 {
                    row[3 * x + c] = r.color[c].clamp(0.0, 1.0) as f32;
                }
                arow[x] = r.alpha.clamp(0.0, 1.0) as f32;
            }
        });
    if cancel.load(Ordering::Relaxed) {
        return Ok(None);
    }
    Ok(Some(image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;
    use approx::assert_relative_eq;
    use nalgebra::Matrix4;

    fn axis_ray() -> Ray {
        Ray {
            origin: Point3::origin(),
            direction: Vector3::x(),
        }
    }

    fn settings(n: usize, near: f64, far: f64) -> RenderSettings {
        RenderSettings {
            samples_per_ray: n,
            near,
            far,
            ..Default::default()
        }
    }

    #[test]
    fn empty_space_shows_background() {
        let s = RenderSettings {
            background: [0.2, 0.4, 0.6],
            ..settings(16, 0.5, 2.0)
        };
        let r = integrate_ray(|_, _| RadianceSample::EMPTY, &axis_ray(), &s, None);
        assert_eq!(r.color, Vector3::new(0.2, 0.4, 0.6));
        assert_eq!(r.alpha, 0.0);
    }

    #[test]
    fn opaque_sample_takes_its_color() {
        let red = Vector3::new(1.0, 0.0, 0.0);
        let r = integrate_ray(
            |_, _| RadianceSample::new(red, 1e6),
            &axis_ray(),
            &settings(4, 1.0, 2.0),
            None,
        );
        assert_relative_eq!(r.color, red, epsilon = 1e-12);
        assert_relative_eq!(r.alpha, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_segment_compositing() {
        // Segments [0,1) and [1,2]: the first lets half the light through.
        let red = Vector3::new(1.0, 0.0, 0.0);
        let blue = Vector3::new(0.0, 0.0, 1.0);
        let query = |p: &Point3<f64>, _: &Vector3<f64>| {
            if p.x < 1.0 {
                RadianceSample::new(red, std::f64::consts::LN_2)
            } else {
                RadianceSample::new(blue, 1e9)
            }
        };
        let s = RenderSettings {
            background: [0.0; 3],
            ..settings(2, 1e-9, 2.0 + 1e-9)
        };
        let r = integrate_ray(query, &axis_ray(), &s, None);
        assert_relative_eq!(r.color, 0.5 * red + 0.5 * blue, epsilon = 1e-8);
    }

    #[test]
    fn homogeneous_medium_matches_beer_lambert() {
        let sigma = 0.7;
        let s = settings(128, 1.0, 3.5);
        let r = integrate_ray(
            |_, _| RadianceSample::new(Vector3::new(0.3, 0.3, 0.3), sigma),
            &axis_ray(),
            &s,
            None,
        );
        let oracle = 1.0 - (-sigma * 2.5f64).exp();
        assert!((r.alpha - oracle).abs() < 1e-3);
        assert!((r.alpha + r.transmittance - 1.0).abs() < 1e-12);
        assert!(r.monotone);
    }

    #[test]
    fn jitter_is_seeded() {
        let s = RenderSettings {
            stratified_jitter: true,
            ..settings(32, 0.5, 3.0)
        };
        let f = AnalyticField::sphere(Point3::new(2.0, 0.0, 0.0), 0.5, Vector3::new(0.1, 0.9, 0.1), 3.0);
        let q = |p: &Point3<f64>, d: &Vector3<f64>| f.query(p, d);
        let a = integrate_ray(q, &axis_ray(), &s, Some(&mut pixel_rng(7, 3)));
        let b = integrate_ray(q, &axis_ray(), &s, Some(&mut pixel_rng(7, 3)));
        let c = integrate_ray(q, &axis_ray(), &s, Some(&mut pixel_rng(8, 3)));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn jittered_segments_span_near_to_far() {
        let s = RenderSettings {
            stratified_jitter: true,
            ..settings(16, 1.0, 3.0)
        };
        let medium = |_: &Point3<f64>, _: &Vector3<f64>| RadianceSample::new(Vector3::repeat(0.5), 0.9);
        let r = integrate_ray(medium, &axis_ray(), &s, Some(&mut pixel_rng(1, 0)));
        assert_relative_eq!(r.transmittance, (-0.9f64 * 2.0).exp(), epsilon = 1e-12);
    }

    #[test]
    fn settings_validation() {
        assert!(RenderSettings::default().validate().is_ok());
        assert!(settings(1, 0.1, 1.0).validate().is_err());
        assert!(settings(8, 0.0, 1.0).validate().is_err());
        assert!(settings(8, 2.0, 1.0).validate().is_err());
    }

    #[test]
    fn cancelled_render() {
        let f = AnalyticField::sphere(Point3::new(0.0, 0.0, -3.0), 0.5, Vector3::new(1.0, 0.0, 0.0), 3.0);
        let cam = Camera::new(Matrix4::identity(), 0.8, 8, 8).unwrap();
        let cancel = AtomicBool::new(true);
        assert!(render_cancellable(&f, &cam, &RenderSettings::default(), &cancel)
            .unwrap()
            .is_none());
    }
}
