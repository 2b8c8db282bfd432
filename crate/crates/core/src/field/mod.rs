//! Radiance-field sources and the uniform point/direction query.

mod analytic;
mod grid;
mod io;

pub use analytic::AnalyticField;
pub use grid::GridField;
pub use io::{decode_grid, encode_grid, load_grid_field, load_scene, save_grid_field, FieldError, GridHeader};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;

/// Color and density returned by a field query.
///
/// `density` is an extinction coefficient in 1/world-length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadianceSample {
    pub color: Vector3<f64>,
    pub density: f64,
}

impl RadianceSample {
    pub const EMPTY: RadianceSample = RadianceSample {
        color: Vector3::new(0.0, 0.0, 0.0),
        density: 0.0,
    };

    pub fn new(color: Vector3<f64>, density: f64) -> Self {
        Self { color, density }
    }

    /// Largest absolute difference over density and the three color channels.
    pub fn distance(&self, other: &RadianceSample) -> f64 {
        let dc = (self.color - other.color).abs().max();
        dc.max((self.density - other.density).abs())
    }

    pub fn is_valid(&self) -> bool {
        self.density >= 0.0 && self.density.is_finite() && self.color.iter().all(|c| (0.0..=1.0).contains(c))
    }
}

/// A queryable volumetric scene.
///
/// Implementations must be callable from many render workers at once.
pub trait RadianceField: Send + Sync {
    /// Color and density at `p` seen along unit direction `d`.
    fn query(&self, p: &Point3<f64>, d: &Vector3<f64>) -> RadianceSample;

    /// World box outside of which the field is empty, if known.
    fn bounds(&self) -> Option<Aabb> {
        None
    }

    /// Upper bound on |query(p) - query(q)| / |p - q| under
    /// [`RadianceSample::distance`], when the field is Lipschitz.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    /// Whether color depends on `d`. Callers may skip direction warping
    /// when this is false.
    fn is_view_dependent(&self) -> bool {
        false
    }
}

impl<F: RadianceField + ?Sized> RadianceField for std::sync::Arc<F> {
    fn query(&self, p: &Point3<f64>, d: &Vector3<f64>) -> RadianceSample {
        (**self).query(p, d)
    }
    fn bounds(&self) -> Option<Aabb> {
        (**self).bounds()
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        (**self).lipschitz_bound()
    }
    fn is_view_dependent(&self) -> bool {
        (**self).is_view_dependent()
    }
}

impl<F: RadianceField + ?Sized> RadianceField for &F {
    fn query(&self, p: &Point3<f64>, d: &Vector3<f64>) -> RadianceSample {
        (**self).query(p, d)
    }
    fn bounds(&self) -> Option<Aabb> {
        (**self).bounds()
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        (**self).lipschitz_bound()
    }
    fn is_view_dependent(&self) -> bool {
        (**self).is_view_dependent()
    }
}
