//! Querying the edited field through one edit or a stack of edits.

use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::mapping::{classify, map_point, phi_direction, PointMap};
use super::{EditSpec, WarpError, WarpGrid, DEFAULT_WARP_RESOLUTION};
use crate::field::{RadianceField, RadianceSample};
use crate::geometry::Aabb;

/// Default cap on the number of stacked edits.
pub const DEFAULT_MAX_STACK: usize = 32;

/// One edit of a stack together with its baked grid. Without a grid the
/// exact per-sample mapping is used.
#[derive(Debug, Clone)]
pub struct WarpStage {
    pub edit: Arc<EditSpec>,
    pub grid: Option<Arc<WarpGrid>>,
}

impl WarpStage {
    pub fn exact(edit: EditSpec) -> Self {
        Self {
            edit: Arc::new(edit),
            grid: None,
        }
    }

    pub fn baked(edit: EditSpec, grid: WarpGrid) -> Self {
        Self {
            edit: Arc::new(edit),
            grid: Some(Arc::new(grid)),
        }
    }

    fn fd_step(&self) -> f64 {
        match &self.grid {
            Some(g) => 0.5 * g.spacing(),
            None => 0.5 * self.edit.cages().outer.diameter() / (DEFAULT_WARP_RESOLUTION - 1) as f64,
        }
    }

    /// Maps `p` one edit back. `None` when the edit empties `p`.
    fn pull_back(
        &self,
        p: &Point3<f64>,
        d: &Vector3<f64>,
        with_direction: bool,
    ) -> Option<(Point3<f64>, Vector3<f64>)> {
        let edit = &*self.edit;
        let map = PointMap::for_region(edit.mode(), classify(edit.cages(), p));
        match map {
            PointMap::Empty => return None,
            PointMap::Identity => return Some((*p, *d)),
            PointMap::Inner | PointMap::Shell => {}
        }
        let point = match &self.grid {
            Some(g) if g.bbox().contains(p) => g.canonical_point(p),
            _ => map_point(edit, map, p),
        };
        let direction = if with_direction {
            phi_direction(edit, map, p, d, self.fd_step())
        } else {
            *d
        };
        Some((point, direction))
    }
}

/// Where a composed query lands in the unedited scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Composed {
    Canonical {
        point: Point3<f64>,
        direction: Vector3<f64>,
    },
    /// Some stage emptied the sample.
    Empty,
}

/// Maps `p` and `d` through `stack` (oldest first) back to the unedited scene,
/// newest edit first.
pub fn compose_edits(stack: &[WarpStage], p: &Point3<f64>, d: &Vector3<f64>) -> Result<Composed, WarpError> {
    check_depth(stack.len(), DEFAULT_MAX_STACK)?;
    Ok(compose(stack, p, d, true))
}

fn check_depth(depth: usize, max: usize) -> Result<(), WarpError> {
    if depth > max {
        Err(WarpError::StackTooDeep { depth, max })
    } else {
        Ok(())
    }
}

fn compose(stack: &[WarpStage], p: &Point3<f64>, d: &Vector3<f64>, with_direction: bool) -> Composed {
    let (mut point, mut direction) = (*p, *d);
    for stage in stack.iter().rev() {
        match stage.pull_back(&point, &direction, with_direction) {
            Some((q, e)) => {
                point = q;
                direction = e;
            }
            None => return Composed::Empty,
        }
    }
    Composed::Canonical { point, direction }
}

/// Samples the field as edited by a single edit. `grid = None` is the exact
/// per-sample path.
pub fn query_deformed<F: RadianceField + ?Sized>(
    field: &F,
    edit: &EditSpec,
    grid: Option<&WarpGrid>,
    p: &Point3<f64>,
    d: &Vector3<f64>,
) -> RadianceSample {
    let map = PointMap::for_region(edit.mode(), classify(edit.cages(), p));
    match map {
        PointMap::Empty => RadianceSample::EMPTY,
        PointMap::Identity => field.query(p, d),
        PointMap::Inner | PointMap::Shell => {
            let q = match grid {
                Some(g) if g.bbox().contains(p) => g.canonical_point(p),
                _ => map_point(edit, map, p),
            };
            let e = if field.is_view_dependent() {
                let h = match grid {
                    Some(g) => 0.5 * g.spacing(),
                    None => 0.5 * edit.cages().outer.diameter() / (DEFAULT_WARP_RESOLUTION - 1) as f64,
                };
                phi_direction(edit, map, p, d, h)
            } else {
                *d
            };
            field.query(&q, &e)
        }
    }
}

/// A field seen through a stack of edits.
#[derive(Debug, Clone)]
pub struct DeformedField<F> {
    base: F,
    stack: Vec<WarpStage>,
}

impl<F: RadianceField> DeformedField<F> {
    pub fn new(base: F, stack: Vec<WarpStage>) -> Result<Self, WarpError> {
        Self::with_max_depth(base, stack, DEFAULT_MAX_STACK)
    }

    pub fn with_max_depth(base: F, stack: Vec<WarpStage>, max: usize) -> Result<Self, WarpError> {
        check_depth(stack.len(), max)?;
        Ok(Self { base, stack })
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    pub fn stack(&self) -> &[WarpStage] {
        &self.stack
    }
}

impl<F: RadianceField> RadianceField for DeformedField<F> {
    fn query(&self, p: &Point3<f64>, d: &Vector3<f64>) -> RadianceSample {
        match compose(&self.stack, p, d, self.base.is_view_dependent()) {
            Composed::Canonical { point, direction } => self.base.query(&point, &direction),
            Composed::Empty => RadianceSample::EMPTY,
        }
    }

    /// Edited content never leaves its outer cage, so the union of the base
    /// bounds and every outer cage box is conservative.
    fn bounds(&self) -> Option<Aabb> {
        let mut b = self.base.bounds()?;
        for stage in &self.stack {
            b = b.union(stage.edit.cages().outer.aabb());
        }
        Some(b)
    }

    fn is_view_dependent(&self) -> bool {
        self.base.is_view_dependent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cage::{HexCage, TransformParams};
    use crate::field::AnalyticField;
    use crate::warp::{bake_warp_grid, AdjustmentMode, RegionLabel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scene() -> AnalyticField {
        AnalyticField::sphere(Point3::origin(), 0.25, Vector3::new(0.8, 0.2, 0.1), 5.0)
    }

    fn cages() -> (HexCage, HexCage) {
        (
            HexCage::axis_aligned(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap(),
            HexCage::axis_aligned(Point3::new(-0.3, -0.3, -0.3), Point3::new(0.3, 0.3, 0.3)).unwrap(),
        )
    }

    fn translated(t: Vector3<f64>, mode: AdjustmentMode) -> EditSpec {
        let (o, i) = cages();
        EditSpec::with_transform(o, i, mode, TransformParams::translation(t)).unwrap()
    }

    fn random_points(n: usize, seed: u64, half: f64) -> Vec<Point3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::from(Vector3::from_fn(|_, _| rng.gen_range(-half..half))))
            .collect()
    }

    #[test]
    fn empty_stack_is_identity() {
        let p = Point3::new(0.1, 0.2, 0.3);
        let d = Vector3::z();
        assert_eq!(
            compose_edits(&[], &p, &d).unwrap(),
            Composed::Canonical { point: p, direction: d }
        );
    }

    #[test]
    fn identity_edit_matches_plain_field() {
        let f = scene();
        let (o, i) = cages();
        for mode in [
            AdjustmentMode::Continuous,
            AdjustmentMode::DISCRETE_EMPTY,
            AdjustmentMode::DISCRETE_COPY,
        ] {
            let e = EditSpec::new(o.clone(), i.clone(), mode).unwrap();
            let g = bake_warp_grid(&e, 16).unwrap();
            for p in random_points(2000, 3, 1.5) {
                let d = Vector3::x();
                assert_eq!(query_deformed(&f, &e, None, &p, &d), f.query(&p, &d));
                assert_eq!(query_deformed(&f, &e, Some(&g), &p, &d), f.query(&p, &d));
            }
        }
    }

    #[test]
    fn discrete_empty_and_copy() {
        let f = scene();
        let t = Vector3::new(0.5, 0.0, 0.0);
        let moved = translated(t, AdjustmentMode::DISCRETE_EMPTY);
        let copied = translated(t, AdjustmentMode::DISCRETE_COPY);
        let d = Vector3::z();
        let old = Point3::new(-0.1, 0.0, 0.0);
        assert_eq!(classify(moved.cages(), &old), RegionLabel::CanonicalInnerOnly);
        assert_eq!(query_deformed(&f, &moved, None, &old, &d).density, 0.0);
        assert_eq!(query_deformed(&f, &copied, None, &old, &d).density, 5.0);
        let new = Point3::new(0.5, 0.0, 0.0);
        assert_eq!(query_deformed(&f, &moved, None, &new, &d).density, 5.0);
        assert_eq!(query_deformed(&f, &copied, None, &new, &d).density, 5.0);
    }

    #[test]
    fn single_stage_matches_query_deformed() {
        let f = scene();
        let e = translated(Vector3::new(0.2, 0.1, 0.0), AdjustmentMode::Continuous);
        let g = bake_warp_grid(&e, 24).unwrap();
        let field = DeformedField::new(&f, vec![WarpStage::baked(e.clone(), g.clone())]).unwrap();
        for p in random_points(2000, 5, 1.2) {
            let d = Vector3::y();
            assert_eq!(field.query(&p, &d), query_deformed(&f, &e, Some(&g), &p, &d));
        }
    }

    #[test]
    fn two_translations_accumulate() {
        let t1 = Vector3::new(0.1, 0.0, 0.0);
        let t2 = Vector3::new(0.0, 0.15, 0.0);
        let first = translated(t1, AdjustmentMode::DISCRETE_EMPTY);
        let (o, _) = cages();
        let second = EditSpec::with_transform(
            o,
            first.cages().inner_deformed.clone(),
            AdjustmentMode::DISCRETE_EMPTY,
            TransformParams::translation(t2),
        )
        .unwrap();
        let stack = vec![WarpStage::exact(first), WarpStage::exact(second.clone())];
        for p in random_points(500, 8, 0.3) {
            let q = p + t1 + t2;
            assert!(second.cages().inner_deformed.contains(&q));
            match compose_edits(&stack, &q, &Vector3::x()).unwrap() {
                Composed::Canonical { point, .. } => assert!((point - p).norm() < 1e-12),
                Composed::Empty => panic!("moved content emptied at {q:?}"),
            }
        }
    }

    #[test]
    fn depth_limit() {
        let e = translated(Vector3::new(0.1, 0.0, 0.0), AdjustmentMode::Continuous);
        let stack = vec![WarpStage::exact(e); DEFAULT_MAX_STACK + 1];
        assert_eq!(
            compose_edits(&stack, &Point3::origin(), &Vector3::x()),
            Err(WarpError::StackTooDeep { depth: 33, max: 32 })
        );
        assert!(DeformedField::new(scene(), stack).is_err());
    }

    #[test]
    fn continuous_locality_outside_outer() {
        let f = scene();
        let e = translated(Vector3::new(0.3, -0.1, 0.1), AdjustmentMode::Continuous);
        for p in random_points(5000, 11, 3.0) {
            if !e.cages().outer.contains(&p) {
                let d = Vector3::x();
                assert_eq!(query_deformed(&f, &e, None, &p, &d), f.query(&p, &d));
            }
        }
    }
}
