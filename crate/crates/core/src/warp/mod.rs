//! The deformed radiance field.
//!
//! Space is split by an edit's cage pair into four regions (see
//! [`RegionLabel`]). Samples in the deformed inner cage are pulled back into
//! the canonical inner cage; in continuous mode the shell between the inner
//! and outer cages is blended so the field stays continuous; everything else
//! reads the unedited field. Baked [`WarpGrid`]s discretize the mapping.

mod compose;
mod edit;
mod grid;
mod mapping;

pub use compose::{compose_edits, query_deformed, Composed, DeformedField, WarpStage, DEFAULT_MAX_STACK};
pub use edit::{AdjustmentMode, EditSpec, Fill, InnerMapping, Manipulation};
pub use grid::{bake_region, bake_warp_grid, bake_warp_grid_cancellable, WarpGrid, DEFAULT_WARP_RESOLUTION};
pub use mapping::{classify, map_point, phi_direction, phi_inner, phi_shell, PointMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a point sits relative to an edit's cages.
///
/// Checked in priority order: deformed inner cage, then canonical inner cage,
/// then outer cage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum RegionLabel {
    OutsideOuter = 0,
    Shell = 1,
    CanonicalInnerOnly = 2,
    DeformedInner = 3,
}

impl RegionLabel {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => RegionLabel::OutsideOuter,
            1 => RegionLabel::Shell,
            2 => RegionLabel::CanonicalInnerOnly,
            3 => RegionLabel::DeformedInner,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarpError {
    #[error("edit stack depth {depth} exceeds the maximum of {max}")]
    StackTooDeep { depth: usize, max: usize },
    #[error("warp resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error(transparent)]
    Cage(#[from] crate::cage::CageError),
}
