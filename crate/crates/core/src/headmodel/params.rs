use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::assets::{hex, ModelAssets};
use crate::error::{ensure_finite, Error, Result};
use crate::{Mat3, Vec3};

/// Tolerance for orthonormality and unit determinant of rotations.
pub const ROTATION_TOL: f64 = 1e-9;

/// Rigid motion `x -> R x + t` (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Mat3,
    translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        check_rotation("rotation", &rotation)?;
        ensure_finite("translation", translation.iter())?;
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(t: Vec3) -> Result<Self> {
        Self::new(Mat3::identity(), t)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// Checks that `r` is orthonormal with determinant +1 within [`ROTATION_TOL`].
pub fn check_rotation(field: &str, r: &Mat3) -> Result<()> {
    ensure_finite(field, r.iter())?;
    let gram = r.transpose() * r - Mat3::identity();
    if gram.amax() > ROTATION_TOL {
        return Err(Error::invalid(
            field,
            "rotation must be orthonormal (R^T R = I)",
        ));
    }
    if (r.determinant() - 1.0).abs() > ROTATION_TOL {
        return Err(Error::invalid(field, "rotation must have determinant +1"));
    }
    Ok(())
}

/// Shape, pose and expression coefficients of one head, plus an optional
/// rigid placement applied after skinning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotionParams {
    pub beta: Vec<f64>,
    /// Axis-angle rotation per joint, three values each (radians).
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    pub root: Option<RigidTransform>,
}

impl MotionParams {
    pub fn zeros(assets: &ModelAssets) -> Self {
        MotionParams {
            beta: vec![0.0; assets.num_shape()],
            theta: vec![0.0; assets.num_pose()],
            psi: vec![0.0; assets.num_expr()],
            root: None,
        }
    }

    pub fn validate_for(&self, assets: &ModelAssets) -> Result<()> {
        check_len("beta", assets.num_shape(), self.beta.len())?;
        check_len("theta", assets.num_pose(), self.theta.len())?;
        check_len("psi", assets.num_expr(), self.psi.len())?;
        ensure_finite("beta", &self.beta)?;
        ensure_finite("theta", &self.theta)?;
        ensure_finite("psi", &self.psi)?;
        Ok(())
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for arr in [&self.beta, &self.theta, &self.psi] {
            h.update((arr.len() as u64).to_le_bytes());
            arr.iter().for_each(|x| h.update(x.to_le_bytes()));
        }
        match &self.root {
            Some(r) => {
                r.rotation
                    .iter()
                    .chain(r.translation.iter())
                    .for_each(|x| h.update(x.to_le_bytes()));
            }
            None => h.update([0u8]),
        }
        hex(&h.finalize())
    }
}

fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::dimension(what, expected, actual))
    }
}

/// Which rigid placement the assembled target head inherits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootPolicy {
    #[default]
    Driving,
    Source,
    Identity,
}

/// Target motion: source identity with driving pose and expression.
pub fn assemble_target(src: &MotionParams, dri: &MotionParams) -> Result<MotionParams> {
    assemble_target_with(src, dri, RootPolicy::default())
}

pub fn assemble_target_with(
    src: &MotionParams,
    dri: &MotionParams,
    policy: RootPolicy,
) -> Result<MotionParams> {
    check_len("driving beta", src.beta.len(), dri.beta.len())?;
    check_len("driving theta", src.theta.len(), dri.theta.len())?;
    check_len("driving psi", src.psi.len(), dri.psi.len())?;
    let root = match policy {
        RootPolicy::Driving => dri.root,
        RootPolicy::Source => src.root,
        RootPolicy::Identity => None,
    };
    Ok(MotionParams {
        beta: src.beta.clone(),
        theta: dri.theta.clone(),
        psi: dri.psi.clone(),
        root,
    })
}

/// Adds user pose and expression offsets to a driving motion.
pub fn apply_edit(
    dri: &MotionParams,
    delta_theta: &[f64],
    delta_psi: &[f64],
) -> Result<MotionParams> {
    check_len("delta_theta", dri.theta.len(), delta_theta.len())?;
    check_len("delta_psi", dri.psi.len(), delta_psi.len())?;
    ensure_finite("delta_theta", delta_theta)?;
    ensure_finite("delta_psi", delta_psi)?;
    Ok(MotionParams {
        beta: dri.beta.clone(),
        theta: dri
            .theta
            .iter()
            .zip(delta_theta)
            .map(|(a, b)| a + b)
            .collect(),
        psi: dri.psi.iter().zip(delta_psi).map(|(a, b)| a + b).collect(),
        root: dri.root,
    })
}
