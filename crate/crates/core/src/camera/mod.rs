//! Pinhole camera and z-buffer depth rendering.
//!
//! Conventions: `H = [R | t]` maps camera-frame points to world space.
//! The camera looks down its `+z` axis with `+x` right and `+y` down in the
//! image. Pixel `(col, row)` has its center at continuous coordinates
//! `(col + 0.5, row + 0.5)`, origin at the top-left image corner.

mod depth;
mod raster;

pub use depth::DepthMap;
pub use raster::render_depth;

use nalgebra::Matrix3x4;

use crate::error::{ensure_finite, Error, Result};
use crate::headmodel::check_rotation;
use crate::{Mat3, Vec3};

/// Smallest camera-frame depth treated as in front of the camera (meters).
pub const NEAR_PLANE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rotation: Mat3,
    translation: Vec3,
    width: usize,
    height: usize,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Mat3,
        translation: Vec3,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        ensure_finite("K", [fx, fy, cx, cy].iter())?;
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::invalid("K", "focal lengths must be positive"));
        }
        check_rotation("H.R", &rotation)?;
        ensure_finite("H.t", translation.iter())?;
        if width == 0 || height == 0 {
            return Err(Error::invalid("width/height", "image must be non-empty"));
        }
        Ok(Camera {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        })
    }

    /// From a zero-skew intrinsic matrix and a camera-to-world `[R | t]`.
    pub fn from_matrices(
        k: &Mat3,
        h: &Matrix3x4<f64>,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if k[(0, 1)] != 0.0 || k[(1, 0)] != 0.0 {
            return Err(Error::invalid("K", "skew must be zero"));
        }
        if k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 || k[(2, 2)] != 1.0 {
            return Err(Error::invalid("K", "last row must be [0, 0, 1]"));
        }
        let rotation = h.fixed_view::<3, 3>(0, 0).into_owned();
        let translation = h.fixed_view::<3, 1>(0, 3).into_owned();
        Self::new(
            k[(0, 0)],
            k[(1, 1)],
            k[(0, 2)],
            k[(1, 2)],
            rotation,
            translation,
            width,
            height,
        )
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn intrinsics(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn extrinsics(&self) -> Matrix3x4<f64> {
        let mut h = Matrix3x4::zeros();
        h.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        h
    }

    pub fn pixel_center(col: usize, row: usize) -> (f64, f64) {
        (col as f64 + 0.5, row as f64 + 0.5)
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }

    /// Camera-frame depth of the world origin.
    pub fn origin_depth(&self) -> f64 {
        self.world_to_camera(&Vec3::zeros()).z
    }

    /// World point at camera depth `d` along the ray through `(u, v)`.
    pub fn backproject(&self, u: f64, v: f64, d: f64) -> Result<Vec3> {
        if !(d > 0.0) {
            return Err(Error::invalid(
                "depth",
                format!("must be positive (got {d})"),
            ));
        }
        let ray = Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        Ok(self.rotation * (ray * d) + self.translation)
    }

    /// Continuous pixel coordinates and camera depth of a world point.
    pub fn project(&self, p: &Vec3) -> Result<((f64, f64), f64)> {
        let q = self.world_to_camera(p);
        if !(q.z > 0.0) {
            return Err(Error::invalid(
                "point",
                format!("at or behind the camera plane (z = {})", q.z),
            ));
        }
        let u = self.fx * q.x / q.z + self.cx;
        let v = self.fy * q.y / q.z + self.cy;
        Ok(((u, v), q.z))
    }
}
