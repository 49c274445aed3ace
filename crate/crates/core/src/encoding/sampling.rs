use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SamplingConfig, SamplingMode};
use crate::camera::{DepthMap, NEAR_PLANE};
use crate::error::Result;

/// Per-pixel ray depths for one camera.
#[derive(Debug, Clone, Copy)]
pub struct DepthSampler {
    cfg: SamplingConfig,
    fallback: (f64, f64),
}

impl DepthSampler {
    /// `origin_depth` is the camera depth of the world origin; the fallback
    /// range is centered there.
    pub fn new(cfg: SamplingConfig, origin_depth: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(DepthSampler {
            cfg,
            fallback: (origin_depth + cfg.d_near, origin_depth + cfg.d_far),
        })
    }

    pub fn fallback_range(&self) -> (f64, f64) {
        self.fallback
    }

    /// Fills `out` (length `n_samples`) with depths for pixel `(col, row)`:
    /// midpoints of equal strata of the sampling interval, or jittered points
    /// inside them when a seed is set. Returns how many depths had to be
    /// raised to [`NEAR_PLANE`].
    pub fn sample_into(
        &self,
        dmap: &DepthMap,
        col: usize,
        row: usize,
        out: &mut [f64],
    ) -> Result<usize> {
        let d = dmap.get(col, row)?;
        let (lo, hi) = match self.cfg.mode {
            SamplingMode::DepthGuided if d > 0.0 => (d - self.cfg.delta, d + self.cfg.delta),
            _ => self.fallback,
        };
        let n = self.cfg.n_samples;
        let step = (hi - lo) / n as f64;
        let mut rng = self.cfg.jitter_seed.map(|seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream((row * dmap.width() + col) as u64);
            r
        });
        let mut clamped = 0;
        for (k, slot) in out.iter_mut().enumerate().take(n) {
            let offset = match rng.as_mut() {
                Some(r) => r.gen::<f64>(),
                None => 0.5,
            };
            let mut depth = lo + (k as f64 + offset) * step;
            if depth < NEAR_PLANE {
                depth = NEAR_PLANE;
                clamped += 1;
            }
            *slot = depth;
        }
        Ok(clamped)
    }
}

/// Ray depths for one pixel; see [`DepthSampler::sample_into`].
pub fn sample_depths(
    dmap: &DepthMap,
    col: usize,
    row: usize,
    cfg: &SamplingConfig,
    origin_depth: f64,
) -> Result<Vec<f64>> {
    let sampler = DepthSampler::new(*cfg, origin_depth)?;
    let mut out = vec![0.0; cfg.n_samples];
    sampler.sample_into(dmap, col, row, &mut out)?;
    Ok(out)
}
