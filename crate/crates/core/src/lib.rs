//! Learning-free motion correspondence for portrait animation.
//!
//! The pipeline evaluates a blendshape head model for a source and a target
//! motion, relates the two meshes through a nearest-triangle surface field,
//! and stacks the resulting per-point 3D flows along every pixel ray into an
//! `H x W x 3N` conditioning tensor.
//!
//! Modules, bottom-up:
//! - [`geometry`]: triangle meshes, BVH, exact closest-point queries.
//! - [`headmodel`]: blendshapes, linear blend skinning, parameter mixing and edits.
//! - [`surfaceflow`]: surface-field correspondence and 3D flows.
//! - [`camera`]: pinhole projection and z-buffer depth rendering.
//! - [`encoding`]: depth-guided ray sampling and flow-encoding assembly.
//! - [`tensorio`]: on-disk formats for tensors, assets, params, cameras and configs.

pub mod camera;
pub mod encoding;
pub mod error;
pub mod geometry;
pub mod headmodel;
pub mod surfaceflow;
pub mod tensorio;

pub use camera::{Camera, DepthMap};
pub use encoding::{EncodeConfig, FlowEncoding, SamplingConfig, SamplingMode};
pub use error::{Error, ErrorClass, Result};
pub use geometry::{Bvh, SurfacePoint, TriMesh};
pub use headmodel::{ModelAssets, MotionParams, RigidTransform};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Runs `f` inside a dedicated worker pool of `threads` threads.
///
/// All parallel stages in this crate produce output independent of the
/// pool size, so this only affects wall-clock time.
pub fn with_workers<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("failed to build worker pool");
    pool.install(f)
}
