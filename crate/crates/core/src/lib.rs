//! Grammar-driven urban visual analytics engine.
//!
//! Physical layers (buildings, parks, roads, grids) and thematic layers
//! (point samples) are linked through *knots*: named chains of spatial joins
//! and aggregations declared in a JSON specification.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity, clippy::single_range_in_vec_init, clippy::while_let_loop)]

pub mod app;
pub mod geometry;
pub mod grammar;
pub mod ingest;
pub mod knot;
pub mod layer;
pub mod scalar;
pub mod shadow;

pub use geometry::{Aabb2, GeoBox, LocalFrame, Vec2, Vec3};
pub use grammar::{parse_spec, validate_spec, Diagnostic, Severity, Specification};
pub use knot::{EvaluatedKnot, KnotError};
pub use layer::{Layer, PhysicalKind, PhysicalLayer, PhysicalObject, ThematicLayer, ThematicPoint, WorkspaceCatalog};
pub use scalar::Scalar;
