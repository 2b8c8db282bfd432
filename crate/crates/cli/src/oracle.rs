//! Measurements shared by `render` and `ablate`.

use std::sync::Arc;

use cagewarp_core::field::RadianceField;
use cagewarp_core::geometry::Aabb;
use cagewarp_core::render::discontinuity_energy;
use cagewarp_core::warp::{DeformedField, WarpStage};
use cagewarp_core::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probes per configuration for grid-vs-exact comparisons.
pub const ORACLE_PROBES: usize = 10_000;
/// Probe grid per cage face for discontinuity energy.
pub const FACE_PROBES: usize = 12;
/// Straddle separation relative to the scene diameter.
pub const STRADDLE_FRACTION: f64 = 1e-4;

pub fn exact_stages(stages: &[WarpStage]) -> Vec<WarpStage> {
    stages
        .iter()
        .map(|s| WarpStage {
            edit: s.edit.clone(),
            grid: None,
        })
        .collect()
}

/// Largest sample difference between the baked and exact stacks at seeded
/// random points in the union of the outer cage boxes.
pub fn grid_vs_exact(scene: &Arc<dyn RadianceField>, stages: &[WarpStage], seed: u64) -> f64 {
    let Some(region) = stages
        .iter()
        .map(|s| *s.edit.cages().outer.aabb())
        .reduce(|a, b| a.union(&b))
    else {
        return 0.0;
    };
    let baked = DeformedField::new(scene.clone(), stages.to_vec()).expect("stack depth checked by session");
    let exact = DeformedField::new(scene.clone(), exact_stages(stages)).expect("stack depth checked by session");
    probe_points(&region, ORACLE_PROBES, seed)
        .iter()
        .map(|p| {
            let d = Vector3::z();
            baked.query(p, &d).distance(&exact.query(p, &d))
        })
        .fold(0.0, f64::max)
}

pub fn probe_points(region: &Aabb, n: usize, seed: u64) -> Vec<Point3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point3::from(Vector3::from_fn(|a, _| rng.gen_range(region.min[a]..=region.max[a]))))
        .collect()
}

/// Straddle-pair energy across the deformed inner and outer cage surfaces of
/// every stage, through the exact mapping.
pub fn stack_discontinuity(scene: &Arc<dyn RadianceField>, stages: &[WarpStage], eps: f64) -> f64 {
    let exact = DeformedField::new(scene.clone(), exact_stages(stages)).expect("stack depth checked by session");
    let surfaces: Vec<_> = stages
        .iter()
        .flat_map(|s| [&s.edit.cages().inner_deformed, &s.edit.cages().outer])
        .collect();
    discontinuity_energy(&exact, &surfaces, eps, FACE_PROBES)
}
