//! Hexahedral cages.
//!
//! Vertex `i` of a cage sits at trilinear coordinates
//! `(u, v, w) = (i & 1, (i >> 1) & 1, (i >> 2) & 1)`. A cage is valid when its
//! trilinear map does not fold over: the Jacobian determinant is positive at
//! all eight corners and at the center.

mod hex;
mod intersect;
mod pair;
mod transform;

pub use hex::{CageFace, Handle, HexCage, NewtonSolution, EDGES, MAX_NEWTON_ITERATIONS};
pub use pair::{CagePair, CageSetup, CageTarget};
pub use transform::{
    build_inverse_transform, build_transform, rotation_block, rotation_x, rotation_y, rotation_z, AffineMap,
    TransformParams,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CageError {
    #[error("degenerate cage: Jacobian determinant {det:.3e} at {location} is not positive")]
    Degenerate { location: String, det: f64 },
    #[error("cage has a non-finite vertex coordinate")]
    NonFinite,
    #[error("handle out of range: {0}")]
    InvalidHandle(String),
    #[error("invalid transform parameters: {0}")]
    InvalidParams(String),
    #[error("{cage} vertices {vertices:?} are not strictly inside the outer cage")]
    Containment { cage: &'static str, vertices: Vec<usize> },
}
