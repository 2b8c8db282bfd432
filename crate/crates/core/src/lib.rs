//! Cage-driven geometry editing for volumetric radiance fields.
//!
//! A scene is any [`field::RadianceField`]. The user wraps part of it in a
//! pair of hexahedral cages: the inner cage selects what moves, the outer cage
//! bounds the space that is allowed to change. Manipulating the inner cage
//! produces an [`warp::EditSpec`]; rendering the edited scene warps every
//! sample back into the unedited (canonical) field instead of touching the
//! field itself.
//!
//! Modules, bottom up:
//!
//! - [`field`]: grid and analytic radiance fields, the grid file format.
//! - [`cage`]: hexahedral cages, composite transforms, corner/edge drags,
//!   forward and inverse trilinear maps.
//! - [`warp`]: region classification, transformed-to-canonical mappings,
//!   warp-grid baking and multi-edit composition.
//! - [`render`]: pinhole cameras, emission-absorption ray marching, images
//!   and metrics.
//! - [`session`]: the interactive editing state machine.

pub mod cage;
pub mod field;
pub mod geometry;
pub mod render;
pub mod session;
pub mod warp;

pub use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
