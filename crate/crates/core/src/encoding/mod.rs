//! Per-pixel 3D flow encoding.
//!
//! Every pixel ray of the target view is sampled at `N` depths; each sample is
//! mapped back to the source head through the surface field and the
//! displacement `p_src - p_tgt` is stored. The result is an `H x W x 3N`
//! tensor, row-major with the channel axis fastest and the three flow
//! components of sample `k` at channels `3k..3k+3`.

mod config;
mod sampling;
mod vis;

pub use config::{EncodeConfig, SamplingConfig, SamplingMode};
pub use sampling::{sample_depths, DepthSampler};
pub use vis::{flow_visualization_ppm, VIS_FLOW_FLOOR};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{render_depth, Camera, DepthMap};
use crate::error::{Error, Result};
use crate::geometry::{IndexedMesh, TriMesh};
use crate::headmodel::{
    apply_edit, assemble_target_with, evaluate_mesh, ModelAssets, MotionParams,
};
use crate::surfaceflow::{FlowSample, SurfaceField};
use crate::Vec3;

pub const ENCODING_KIND: &str = "flow_encoding";

/// Header metadata stored alongside the tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMeta {
    pub kind: String,
    pub height: usize,
    pub width: usize,
    pub n_samples: usize,
    /// Channel layout: `[f1x f1y f1z f2x ...]` per pixel.
    pub layout: String,
    pub config: EncodeConfig,
    pub origin_depth: f64,
    /// Fallback sampling interval in camera depth, before near-plane clamping.
    pub fallback_range: [f64; 2],
    /// Number of sampled depths raised to the camera near plane.
    pub clamped_samples: usize,
    pub covered_pixels: usize,
    /// Largest flow magnitude at sample `n_samples / 2` over all pixels.
    pub mid_sample_max_flow: f64,
    pub assets_digest: String,
    pub src_digest: String,
    pub dri_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEncoding {
    pub data: Vec<f32>,
    pub meta: EncodingMeta,
}

impl FlowEncoding {
    pub fn shape(&self) -> [usize; 3] {
        [self.meta.height, self.meta.width, 3 * self.meta.n_samples]
    }

    pub fn flow(&self, col: usize, row: usize, sample: usize) -> [f32; 3] {
        let c = 3 * self.meta.n_samples;
        let base = (row * self.meta.width + col) * c + 3 * sample;
        [self.data[base], self.data[base + 1], self.data[base + 2]]
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, x| m.max(x.abs()))
    }
}

/// Everything needed to query flows for one (source, target) pair in one view.
pub struct FlowEncoder {
    target: IndexedMesh,
    source: TriMesh,
    camera: Camera,
    depth: DepthMap,
    sampler: DepthSampler,
    cfg: EncodeConfig,
}

impl FlowEncoder {
    pub fn new(
        target: TriMesh,
        source: TriMesh,
        camera: Camera,
        cfg: EncodeConfig,
    ) -> Result<Self> {
        if !target.same_topology(&source) {
            return Err(Error::TopologyMismatch);
        }
        let depth = render_depth(&target, &camera);
        let sampler = DepthSampler::new(cfg.sampling, camera.origin_depth())?;
        Ok(FlowEncoder {
            target: IndexedMesh::new(target)?,
            source,
            camera,
            depth,
            sampler,
            cfg,
        })
    }

    pub fn target(&self) -> &IndexedMesh {
        &self.target
    }

    pub fn source(&self) -> &TriMesh {
        &self.source
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn depth(&self) -> &DepthMap {
        &self.depth
    }

    pub fn sampler(&self) -> &DepthSampler {
        &self.sampler
    }

    fn field(&self) -> SurfaceField<'_> {
        SurfaceField::new(&self.target, &self.source, self.cfg.sf_offset)
            .expect("topology checked at construction")
    }

    /// Sampled target points along the ray of pixel `(col, row)`.
    pub fn target_points(&self, col: usize, row: usize) -> Result<Vec<Vec3>> {
        let mut depths = vec![0.0; self.cfg.sampling.n_samples];
        self.sampler
            .sample_into(&self.depth, col, row, &mut depths)?;
        let (u, v) = Camera::pixel_center(col, row);
        depths
            .iter()
            .map(|&d| self.camera.backproject(u, v, d))
            .collect()
    }

    /// Flow samples of one pixel, in sample order.
    pub fn pixel_flows(&self, col: usize, row: usize) -> Result<Vec<FlowSample>> {
        let field = self.field();
        self.target_points(col, row)?
            .iter()
            .map(|p| field.flow(p))
            .collect()
    }

    /// Assembles the full tensor on the ambient worker pool. Rows are written
    /// independently, so the output does not depend on the pool size.
    pub fn encode(&self, digests: Digests) -> Result<FlowEncoding> {
        let (w, h) = (self.camera.width(), self.camera.height());
        let n = self.cfg.sampling.n_samples;
        let row_len = w * 3 * n;
        let mut data = vec![0f32; h * row_len];
        let field = self.field();

        let clamped: usize = data
            .par_chunks_mut(row_len)
            .enumerate()
            .map(|(row, out)| -> Result<usize> {
                let mut depths = vec![0.0; n];
                let mut clamped = 0;
                for col in 0..w {
                    clamped += self
                        .sampler
                        .sample_into(&self.depth, col, row, &mut depths)?;
                    let (u, v) = Camera::pixel_center(col, row);
                    let px = &mut out[col * 3 * n..(col + 1) * 3 * n];
                    for (k, &d) in depths.iter().enumerate() {
                        let p = self.camera.backproject(u, v, d)?;
                        let f = field.flow(&p)?.flow;
                        if !(f.x.is_finite() && f.y.is_finite() && f.z.is_finite()) {
                            return Err(Error::NonFinite(format!(
                                "flow at pixel ({col}, {row}) sample {k}"
                            )));
                        }
                        px[3 * k] = f.x as f32;
                        px[3 * k + 1] = f.y as f32;
                        px[3 * k + 2] = f.z as f32;
                    }
                }
                Ok(clamped)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();

        let mid = n / 2;
        let mid_sample_max_flow = data
            .chunks_exact(3 * n)
            .map(|px| {
                let f = &px[3 * mid..3 * mid + 3];
                ((f[0] as f64).powi(2) + (f[1] as f64).powi(2) + (f[2] as f64).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        let (lo, hi) = self.sampler.fallback_range();

        Ok(FlowEncoding {
            data,
            meta: EncodingMeta {
                kind: ENCODING_KIND.to_string(),
                height: h,
                width: w,
                n_samples: n,
                layout: "hwc_sample_major".to_string(),
                config: self.cfg,
                origin_depth: self.camera.origin_depth(),
                fallback_range: [lo, hi],
                clamped_samples: clamped,
                covered_pixels: self.depth.coverage(),
                mid_sample_max_flow,
                assets_digest: digests.assets,
                src_digest: digests.src,
                dri_digest: digests.dri,
            },
        })
    }
}

/// Content digests echoed into the encoding metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Digests {
    pub assets: String,
    pub src: String,
    pub dri: String,
}

/// Target mesh (source shape, driving motion) and source mesh for a pair.
pub fn evaluate_pair(
    assets: &ModelAssets,
    src: &MotionParams,
    dri: &MotionParams,
    cfg: &EncodeConfig,
) -> Result<(TriMesh, TriMesh)> {
    let tgt_params = assemble_target_with(src, dri, cfg.root_policy)?;
    let target = evaluate_mesh(assets, &tgt_params)?;
    let source = evaluate_mesh(assets, src)?;
    Ok((target, source))
}

pub fn prepare_encoder(
    assets: &ModelAssets,
    src: &MotionParams,
    dri: &MotionParams,
    cam: &Camera,
    cfg: &EncodeConfig,
) -> Result<FlowEncoder> {
    let (target, source) = evaluate_pair(assets, src, dri, cfg)?;
    FlowEncoder::new(target, source, *cam, *cfg)
}

/// Flow encoding that carries the target view back to the source head.
pub fn build_encoding(
    assets: &ModelAssets,
    src: &MotionParams,
    dri: &MotionParams,
    cam: &Camera,
    cfg: &EncodeConfig,
) -> Result<FlowEncoding> {
    let encoder = prepare_encoder(assets, src, dri, cam, cfg)?;
    encoder.encode(Digests {
        assets: assets.digest(),
        src: src.digest(),
        dri: dri.digest(),
    })
}

/// [`build_encoding`] with user pose/expression offsets added to the driving motion.
#[allow(clippy::too_many_arguments)]
pub fn build_edited_encoding(
    assets: &ModelAssets,
    src: &MotionParams,
    dri: &MotionParams,
    delta_theta: &[f64],
    delta_psi: &[f64],
    cam: &Camera,
    cfg: &EncodeConfig,
) -> Result<FlowEncoding> {
    let edited = apply_edit(dri, delta_theta, delta_psi)?;
    build_encoding(assets, src, &edited, cam, cfg)
}
