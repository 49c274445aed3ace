use sha2::{Digest, Sha256};

use crate::error::{ensure_finite, Error, Result};
use crate::Vec3;

/// Tolerance on the row sums of the skinning weights.
pub const SKIN_WEIGHT_SUM_TOL: f64 = 1e-9;

/// Raw arrays of a blendshape head model, prior to validation.
///
/// Displacement bases are stored flat as `[vertex][xyz][column]`, i.e. the
/// entry for vertex `v`, axis `c`, column `k` sits at `(v * 3 + c) * K + k`.
/// `joint_regressor` is `J x L` row-major and `skin_weights` is `L x J`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssetParts {
    pub template_vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub shape_basis: Vec<f64>,
    pub num_shape: usize,
    pub expr_basis: Vec<f64>,
    pub num_expr: usize,
    pub joint_regressor: Vec<f64>,
    pub skin_weights: Vec<f64>,
    /// `L x 3 x 9J`, driven by the flattened `R_j - I` of every joint.
    pub pose_corrective_basis: Option<Vec<f64>>,
    pub joint_parents: Vec<usize>,
}

/// A validated head model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAssets {
    parts: AssetParts,
}

impl ModelAssets {
    pub fn new(parts: AssetParts) -> Result<Self> {
        validate(&parts)?;
        Ok(ModelAssets { parts })
    }

    pub fn parts(&self) -> &AssetParts {
        &self.parts
    }

    pub fn into_parts(self) -> AssetParts {
        self.parts
    }

    pub fn num_vertices(&self) -> usize {
        self.parts.template_vertices.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parts.joint_parents.len()
    }

    pub fn num_shape(&self) -> usize {
        self.parts.num_shape
    }

    pub fn num_expr(&self) -> usize {
        self.parts.num_expr
    }

    /// Length of the pose vector: three axis-angle values per joint.
    pub fn num_pose(&self) -> usize {
        3 * self.num_joints()
    }

    pub fn template_vertices(&self) -> &[Vec3] {
        &self.parts.template_vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.parts.faces
    }

    pub fn skin_weight(&self, vertex: usize, joint: usize) -> f64 {
        self.parts.skin_weights[vertex * self.num_joints() + joint]
    }

    pub fn joint_parents(&self) -> &[usize] {
        &self.parts.joint_parents
    }

    /// SHA-256 over every array in a fixed order, hex encoded.
    pub fn digest(&self) -> String {
        let p = &self.parts;
        let mut h = Sha256::new();
        for v in &p.template_vertices {
            for x in v.iter() {
                h.update(x.to_le_bytes());
            }
        }
        for f in &p.faces {
            for &i in f {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.update((p.num_shape as u64).to_le_bytes());
        h.update((p.num_expr as u64).to_le_bytes());
        for arr in [
            &p.shape_basis,
            &p.expr_basis,
            &p.joint_regressor,
            &p.skin_weights,
        ] {
            h.update((arr.len() as u64).to_le_bytes());
            arr.iter().for_each(|x| h.update(x.to_le_bytes()));
        }
        match &p.pose_corrective_basis {
            Some(arr) => {
                h.update((arr.len() as u64).to_le_bytes());
                arr.iter().for_each(|x| h.update(x.to_le_bytes()));
            }
            None => h.update(u64::MAX.to_le_bytes()),
        }
        for &j in &p.joint_parents {
            h.update((j as u64).to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn validate(p: &AssetParts) -> Result<()> {
    let l = p.template_vertices.len();
    let j = p.joint_parents.len();
    if l == 0 {
        return Err(Error::invalid("template_vertices", "no vertices"));
    }
    if j == 0 {
        return Err(Error::invalid("joint_parents", "no joints"));
    }
    ensure_finite(
        "template_vertices",
        p.template_vertices.iter().flat_map(|v| v.iter()),
    )?;

    for (fi, f) in p.faces.iter().enumerate() {
        if let Some(&bad) = f.iter().find(|&&i| i >= l) {
            return Err(Error::invalid(
                format!("faces[{fi}]"),
                format!("vertex index {bad} >= {l}"),
            ));
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::invalid(
                format!("faces[{fi}]"),
                "degenerate face: indices must be distinct",
            ));
        }
    }

    check_len("shape_basis", l * 3 * p.num_shape, p.shape_basis.len())?;
    ensure_finite("shape_basis", &p.shape_basis)?;
    check_len("expr_basis", l * 3 * p.num_expr, p.expr_basis.len())?;
    ensure_finite("expr_basis", &p.expr_basis)?;
    check_len("joint_regressor", j * l, p.joint_regressor.len())?;
    ensure_finite("joint_regressor", &p.joint_regressor)?;
    check_len("skin_weights", l * j, p.skin_weights.len())?;
    ensure_finite("skin_weights", &p.skin_weights)?;
    if let Some(pc) = &p.pose_corrective_basis {
        check_len("pose_corrective_basis", l * 3 * 9 * j, pc.len())?;
        ensure_finite("pose_corrective_basis", pc)?;
    }

    for (v, row) in p.skin_weights.chunks_exact(j).enumerate() {
        if row.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid(
                format!("skin_weights[{v}]"),
                "weights must be nonnegative",
            ));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SKIN_WEIGHT_SUM_TOL {
            return Err(Error::invalid(
                format!("skin_weights[{v}]"),
                format!("weights must sum to 1 (got {sum})"),
            ));
        }
    }

    if p.joint_parents[0] != 0 {
        return Err(Error::invalid(
            "joint_parents[0]",
            "root joint must be its own parent",
        ));
    }
    for (ji, &parent) in p.joint_parents.iter().enumerate().skip(1) {
        if parent >= ji {
            return Err(Error::invalid(
                format!("joint_parents[{ji}]"),
                format!("parent {parent} must precede the joint"),
            ));
        }
    }
    Ok(())
}

fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::dimension(what, expected, actual))
    }
}
