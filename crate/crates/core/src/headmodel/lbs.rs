use super::{ModelAssets, MotionParams};
use crate::error::Result;
use crate::geometry::TriMesh;
use crate::{Mat3, Vec3};

/// Rotation angles below this use the first-order expansion `I + [w]x`.
const SMALL_ANGLE: f64 = 1e-8;

/// Rodrigues' formula. A zero vector maps to the identity exactly.
pub fn axis_angle_to_matrix(w: &Vec3) -> Mat3 {
    let angle = w.norm();
    if angle < SMALL_ANGLE {
        return Mat3::identity() + w.cross_matrix();
    }
    let k = (w / angle).cross_matrix();
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Evaluates the head model to a triangle mesh with the template topology.
pub fn evaluate_mesh(assets: &ModelAssets, params: &MotionParams) -> Result<TriMesh> {
    TriMesh::new(evaluate_vertices(assets, params)?, assets.faces().to_vec())
}

/// Posed vertex positions: root( LBS( T + B_S(beta) + B_E(psi) + B_P(theta) ) ).
pub fn evaluate_vertices(assets: &ModelAssets, params: &MotionParams) -> Result<Vec<Vec3>> {
    params.validate_for(assets)?;
    let parts = assets.parts();
    let l = assets.num_vertices();
    let nj = assets.num_joints();

    let mut shaped: Vec<Vec3> = parts.template_vertices.clone();
    add_blendshapes(&mut shaped, &parts.shape_basis, &params.beta);
    add_blendshapes(&mut shaped, &parts.expr_basis, &params.psi);

    let joints: Vec<Vec3> = parts
        .joint_regressor
        .chunks_exact(l)
        .map(|row| {
            row.iter()
                .zip(&shaped)
                .fold(Vec3::zeros(), |acc, (&w, v)| acc + v * w)
        })
        .collect();

    let rotations: Vec<Mat3> = params
        .theta
        .chunks_exact(3)
        .map(|w| axis_angle_to_matrix(&Vec3::new(w[0], w[1], w[2])))
        .collect();

    let mut rest = shaped;
    if let Some(basis) = &parts.pose_corrective_basis {
        let feature: Vec<f64> = rotations
            .iter()
            .flat_map(|r| {
                let d = r - Mat3::identity();
                // Row-major flattening of each 3x3 block.
                (0..9).map(move |i| d[(i / 3, i % 3)])
            })
            .collect();
        if feature.iter().any(|&x| x != 0.0) {
            add_blendshapes(&mut rest, basis, &feature);
        }
    }

    let mut posed = if rotations.iter().all(|r| *r == Mat3::identity()) {
        rest
    } else {
        skin(assets, &rest, &joints, &rotations, nj)
    };

    if let Some(root) = &params.root {
        for v in &mut posed {
            *v = root.apply(v);
        }
    }
    Ok(posed)
}

fn add_blendshapes(vertices: &mut [Vec3], basis: &[f64], coeffs: &[f64]) {
    let k = coeffs.len();
    if k == 0 {
        return;
    }
    for (vi, v) in vertices.iter_mut().enumerate() {
        for c in 0..3 {
            let row = &basis[(vi * 3 + c) * k..(vi * 3 + c + 1) * k];
            let offset: f64 = row.iter().zip(coeffs).map(|(b, x)| b * x).sum();
            v[c] += offset;
        }
    }
}

fn skin(
    assets: &ModelAssets,
    rest: &[Vec3],
    joints: &[Vec3],
    rotations: &[Mat3],
    nj: usize,
) -> Vec<Vec3> {
    let parents = assets.joint_parents();
    let mut world_rot = Vec::with_capacity(nj);
    let mut world_trans: Vec<Vec3> = Vec::with_capacity(nj);
    for j in 0..nj {
        if j == 0 {
            world_rot.push(rotations[0]);
            world_trans.push(joints[0]);
        } else {
            let p = parents[j];
            let r = world_rot[p] * rotations[j];
            let t = world_rot[p] * (joints[j] - joints[p]) + world_trans[p];
            world_rot.push(r);
            world_trans.push(t);
        }
    }
    // Relative transforms carry rest-pose joint locations to posed ones.
    let rel_trans: Vec<Vec3> = (0..nj)
        .map(|j| world_trans[j] - world_rot[j] * joints[j])
        .collect();

    rest.iter()
        .enumerate()
        .map(|(vi, v)| {
            let mut m = Mat3::zeros();
            let mut t = Vec3::zeros();
            for j in 0..nj {
                let w = assets.skin_weight(vi, j);
                if w != 0.0 {
                    m += world_rot[j] * w;
                    t += rel_trans[j] * w;
                }
            }
            m * v + t
        })
        .collect()
}
