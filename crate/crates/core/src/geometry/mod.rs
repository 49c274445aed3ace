//! Triangle meshes and nearest-surface queries.

mod bvh;
mod mesh;
mod triangle;

pub use bvh::{Aabb, Bvh, BvhNode, IndexedMesh, DEFAULT_LEAF_SIZE};
pub use mesh::TriMesh;
pub use triangle::{closest_point_on_triangle, TriangleRegion};

use crate::Vec3;

/// Closest point on a mesh surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub face: usize,
    /// Barycentric weights of `point` with respect to the face's three vertices.
    pub bary: [f64; 3],
    pub point: Vec3,
    /// `n_f . (p - point)`; positive on the side the face normal points to.
    pub signed_dist: f64,
    /// Squared Euclidean distance from the query to `point`.
    pub dist_sq: f64,
}

impl SurfacePoint {
    pub fn distance(&self) -> f64 {
        self.dist_sq.sqrt()
    }
}
