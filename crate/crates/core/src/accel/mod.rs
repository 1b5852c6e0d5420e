//! Spatial acceleration: BVH construction and exact ray/scene queries.

mod bvh;
mod ray;

pub use bvh::{build_bvh, intersect_nearest, Bvh};
pub use ray::{intersect_sphere, intersect_triangle, Hit, Ray};

/// Offset applied to `t_min` for rays leaving a surface, meters.
pub const SURFACE_EPS: f64 = 1e-4;
