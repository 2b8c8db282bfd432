use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{CageError, HexCage};

/// Trilinear margin used for strict containment of inner vertices.
const STRICT_MARGIN: f64 = 1e-9;

/// Which cage of a pair a manipulation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CageTarget {
    #[default]
    Inner,
    Outer,
}

/// Outer cage plus the inner cage before and after manipulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CagePair {
    pub outer: HexCage,
    pub inner_canonical: HexCage,
    pub inner_deformed: HexCage,
}

impl CagePair {
    /// Pair with an unmanipulated inner cage.
    pub fn new(outer: HexCage, inner: HexCage) -> Result<Self, CageError> {
        let pair = Self {
            outer,
            inner_deformed: inner.clone(),
            inner_canonical: inner,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), CageError> {
        for (name, cage) in [
            ("inner_canonical", &self.inner_canonical),
            ("inner_deformed", &self.inner_deformed),
        ] {
            let outside = outside_vertices(&self.outer, cage.vertices());
            if !outside.is_empty() {
                return Err(CageError::Containment {
                    cage: name,
                    vertices: outside,
                });
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.inner_canonical == self.inner_deformed
    }
}

/// Cage file contents: an outer cage and an inner cage in corner order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CageSetup {
    pub outer: HexCage,
    pub inner: HexCage,
}

impl CageSetup {
    pub fn into_pair(self) -> Result<CagePair, CageError> {
        CagePair::new(self.outer, self.inner)
    }
}

/// Indices of `vertices` not strictly inside `outer`.
pub fn outside_vertices(outer: &HexCage, vertices: &[Point3<f64>; 8]) -> Vec<usize> {
    (0..8)
        .filter(|&i| !outer.contains_strictly(&vertices[i], STRICT_MARGIN))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn outer() -> HexCage {
        HexCage::axis_aligned(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn half_size_inner_is_accepted() {
        let inner = outer().scaled(0.5).unwrap();
        assert!(CagePair::new(outer(), inner).is_ok());
    }

    #[test]
    fn vertex_on_outer_surface_is_rejected() {
        let inner = HexCage::axis_aligned(Point3::new(-0.5, -0.5, -0.5), Point3::new(1.0, 0.5, 0.5)).unwrap();
        match CagePair::new(outer(), inner).unwrap_err() {
            CageError::Containment { vertices, .. } => assert_eq!(vertices, vec![1, 3, 5, 7]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn partially_outside_lists_vertices() {
        let inner = outer()
            .scaled(0.5)
            .unwrap()
            .deform(super::super::Handle::Corner(6), &Vector3::new(0.0, 2.0, 0.0))
            .unwrap();
        match CagePair::new(outer(), inner).unwrap_err() {
            CageError::Containment { cage, vertices } => {
                assert_eq!(cage, "inner_canonical");
                assert_eq!(vertices, vec![6]);
            }
            e => panic!("{e}"),
        }
    }
}
