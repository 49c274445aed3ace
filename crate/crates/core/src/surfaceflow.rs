//! Backward surface-field correspondence between two meshes that share
//! topology, and the 3D flows it induces.
//!
//! A target point is expressed in the local frame of its nearest target face:
//! barycentric coordinates of its projection onto the face plane plus the
//! signed distance along the face normal. The same coordinates are then read
//! back in the frame of the matching source face. For points whose projection
//! lands inside the nearest face these are exactly the closest-point
//! barycentrics; outside it they are extrapolated, which keeps the map an
//! exact identity for equal meshes and exactly rigid for rigidly moved ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{IndexedMesh, TriMesh};
use crate::Vec3;

/// Whether the signed normal offset is carried over to the source side.
/// With `Off` every target point lands on the source surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SfOffset {
    #[default]
    On,
    Off,
}

/// One correspondence: `flow == p_src - p_tgt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub p_tgt: Vec3,
    pub p_src: Vec3,
    pub flow: Vec3,
}

/// Target mesh (indexed) and source mesh bound together for repeated queries.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceField<'a> {
    target: &'a IndexedMesh,
    source: &'a TriMesh,
    offset: SfOffset,
}

impl<'a> SurfaceField<'a> {
    pub fn new(target: &'a IndexedMesh, source: &'a TriMesh, offset: SfOffset) -> Result<Self> {
        if !target.mesh().same_topology(source) {
            return Err(Error::TopologyMismatch);
        }
        Ok(SurfaceField {
            target,
            source,
            offset,
        })
    }

    pub fn map(&self, p_tgt: &Vec3) -> Result<Vec3> {
        let hit = self.target.closest_point(p_tgt)?;
        let face = hit.face;
        if self.source.is_degenerate(face) {
            return Err(Error::DegenerateFace(face));
        }

        let [a, b, c] = self.target.mesh().triangle(face);
        let (v, w) = plane_coords(p_tgt, &a, &b, &c);
        let h = match self.offset {
            SfOffset::On => hit.signed_dist,
            SfOffset::Off => 0.0,
        };

        let [sa, sb, sc] = self.source.triangle(face);
        let n_src = self.source.normal(face);
        Ok(sa + (sb - sa) * v + (sc - sa) * w + n_src * h)
    }

    pub fn flow(&self, p_tgt: &Vec3) -> Result<FlowSample> {
        let p_src = self.map(p_tgt)?;
        Ok(FlowSample {
            p_tgt: *p_tgt,
            p_src,
            flow: p_src - p_tgt,
        })
    }
}

/// Barycentric weights `(v, w)` of the projection of `p` onto the plane of
/// `(a, b, c)`, relative to edges `b - a` and `c - a`. Not clamped.
fn plane_coords(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (f64, f64) {
    let e1 = b - a;
    let e2 = c - a;
    let ap = p - a;
    let d00 = e1.dot(&e1);
    let d01 = e1.dot(&e2);
    let d11 = e2.dot(&e2);
    let d20 = ap.dot(&e1);
    let d21 = ap.dot(&e2);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    (v, w)
}

/// Corresponding source point of `p_tgt`, with the signed offset enabled.
pub fn surface_field(p_tgt: &Vec3, mesh_tgt: &IndexedMesh, mesh_src: &TriMesh) -> Result<Vec3> {
    SurfaceField::new(mesh_tgt, mesh_src, SfOffset::On)?.map(p_tgt)
}

/// Flows for many points, in input order. Runs on the ambient worker pool.
pub fn flow_batch(
    points: &[Vec3],
    mesh_tgt: &IndexedMesh,
    mesh_src: &TriMesh,
) -> Result<Vec<FlowSample>> {
    let field = SurfaceField::new(mesh_tgt, mesh_src, SfOffset::On)?;
    points.par_iter().map(|p| field.flow(p)).collect()
}
