use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::headmodel::RootPolicy;
use crate::surfaceflow::SfOffset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// `+-delta` band around the rendered head depth; fallback range elsewhere.
    #[default]
    DepthGuided,
    /// Fallback range at every pixel.
    Uniform,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depth_guided" => Ok(SamplingMode::DepthGuided),
            "uniform" => Ok(SamplingMode::Uniform),
            other => Err(Error::invalid(
                "mode",
                format!("expected depth_guided or uniform, got {other:?}"),
            )),
        }
    }
}

/// Where along each pixel ray the flows are queried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Samples per pixel.
    pub n_samples: usize,
    /// Half-width of the band around the rendered depth (meters).
    pub delta: f64,
    /// Fallback range, relative to the camera depth of the world origin (meters).
    pub d_near: f64,
    pub d_far: f64,
    pub mode: SamplingMode,
    /// Uniform jitter inside each stratum, seeded per pixel. Off by default.
    pub jitter_seed: Option<u64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_samples: 20,
            delta: 0.01,
            d_near: -0.65,
            d_far: 0.65,
            mode: SamplingMode::DepthGuided,
            jitter_seed: None,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid("delta", "must be finite and positive"));
        }
        if !(self.d_near.is_finite() && self.d_far.is_finite() && self.d_near < self.d_far) {
            return Err(Error::invalid("d_near/d_far", "need finite d_near < d_far"));
        }
        Ok(())
    }
}

/// Everything that shapes an encoding besides the inputs themselves.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    #[serde(flatten)]
    pub sampling: SamplingConfig,
    pub sf_offset: SfOffset,
    pub root_policy: RootPolicy,
}

impl EncodeConfig {
    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.sampling.mode = mode;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.sampling.n_samples = n;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = EncodeConfig::default();
        assert_eq!(c.sampling.n_samples, 20);
        assert_eq!(c.sampling.delta, 0.01);
        assert_eq!((c.sampling.d_near, c.sampling.d_far), (-0.65, 0.65));
        assert_eq!(c.sampling.mode, SamplingMode::DepthGuided);
        assert_eq!(c.sf_offset, SfOffset::On);
        assert_eq!(c.root_policy, RootPolicy::Driving);
    }

    #[test]
    fn json_is_flat_and_partial() {
        let c: EncodeConfig =
            serde_json::from_str(r#"{"n_samples": 4, "mode": "uniform", "sf_offset": "off"}"#)
                .unwrap();
        assert_eq!(c.sampling.n_samples, 4);
        assert_eq!(c.sampling.mode, SamplingMode::Uniform);
        assert_eq!(c.sf_offset, SfOffset::Off);
        assert_eq!(c.sampling.delta, 0.01);
        assert!(serde_json::from_str::<EncodeConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut s = SamplingConfig::default();
        s.validate().unwrap();
        s.n_samples = 0;
        assert!(s.validate().is_err());
        let mut s = SamplingConfig::default();
        s.delta = 0.0;
        assert!(s.validate().is_err());
        let mut s = SamplingConfig::default();
        s.d_near = 1.0;
        assert!(s.validate().is_err());
    }
}
