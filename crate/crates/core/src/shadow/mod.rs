//! Shadow accumulation: solar ephemeris, ray-casting acceleration and
//! per-sample shadow fractions.

mod accumulate;
mod bvh;
mod sun;

use thiserror::Error;

pub use accumulate::{accumulate_shadow, ShadowResult, RAY_EPSILON};
pub use bvh::{ray_triangle, Aabb3, Bvh};
pub use sun::{sun_position, SunPath, SunPosition};

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error("the scene has no triangles or samples")]
    EmptyScene,
    #[error("the sun path has no instants")]
    EmptyPath,
    #[error("invalid sun path: {0}")]
    InvalidPath(String),
    #[error("layer `{0}` is not a mesh3d layer")]
    NotMesh(String),
}
