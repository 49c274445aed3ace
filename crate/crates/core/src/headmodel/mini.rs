//! Deterministic synthetic head used as a stand-in for licensed model assets.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AssetParts, ModelAssets};
use crate::Vec3;

/// Joint indices of the mini-model.
pub const MINI_NECK: usize = 0;
pub const MINI_JAW: usize = 1;

const RADII: [f64; 3] = [0.075, 0.1, 0.09];
const NUM_SHAPE: usize = 4;
const NUM_EXPR: usize = 4;
const SMOOTH_ITERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MiniModelOptions {
    /// Keep the 0/1 jaw weights instead of smoothing them over the neighbourhood.
    pub binary_skin: bool,
}

/// Synthetic head: an ellipsoidal icosphere (`20 * 4^n_subdiv` faces) facing
/// `+z`, with a neck root joint and a jaw joint, four shape and four
/// expression displacement columns, and no pose correctives.
pub fn make_mini_model(seed: u64, n_subdiv: u32) -> ModelAssets {
    make_mini_model_with(seed, n_subdiv, MiniModelOptions::default())
}

pub fn make_mini_model_with(seed: u64, n_subdiv: u32, opts: MiniModelOptions) -> ModelAssets {
    let (dirs, faces) = icosphere(n_subdiv);
    let l = dirs.len();
    let scale = Vec3::from(RADII);
    let template: Vec<Vec3> = dirs.iter().map(|d| d.component_mul(&scale)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Shape: smooth radial bumps over the whole head.
    let mut shape_basis = vec![0.0; l * 3 * NUM_SHAPE];
    for k in 0..NUM_SHAPE {
        let (axis, freq, phase, amp) = random_wave(&mut rng, 0.003..0.008);
        for (vi, d) in dirs.iter().enumerate() {
            let disp = d * (amp * (freq * PI * d.dot(&axis) + phase).cos());
            for c in 0..3 {
                shape_basis[(vi * 3 + c) * NUM_SHAPE + k] = disp[c];
            }
        }
    }

    // Expression: displacements concentrated around the mouth.
    let mouth = Vec3::new(0.0, -0.45, 0.9).normalize();
    let mut expr_basis = vec![0.0; l * 3 * NUM_EXPR];
    for k in 0..NUM_EXPR {
        let (axis, freq, phase, amp) = random_wave(&mut rng, 0.004..0.008);
        for (vi, d) in dirs.iter().enumerate() {
            let mask = (-(d - mouth).norm_squared() / 0.25).exp();
            let dir = match k {
                0 => *d,
                1 => -Vec3::y(),
                2 => Vec3::x() * d.x.signum(),
                _ => axis,
            };
            let wave = 1.0 + 0.3 * (freq * PI * d.dot(&axis) + phase).cos();
            let disp = dir * (amp * mask * wave);
            for c in 0..3 {
                expr_basis[(vi * 3 + c) * NUM_EXPR + k] = disp[c];
            }
        }
    }

    // Joints sit on the midline, halfway between paired surface vertices.
    let mut joint_regressor = vec![0.0; 2 * l];
    let neck_lo = nearest_dir(&dirs, &Vec3::new(0.0, -1.0, 0.0));
    let neck_hi = nearest_dir(&dirs, &Vec3::new(0.0, 1.0, 0.0));
    joint_regressor[MINI_NECK * l + neck_lo] += 0.6;
    joint_regressor[MINI_NECK * l + neck_hi] += 0.4;
    let jaw_l = nearest_dir(&dirs, &Vec3::new(-1.0, -0.35, -0.1));
    let jaw_r = nearest_dir(&dirs, &Vec3::new(1.0, -0.35, -0.1));
    joint_regressor[MINI_JAW * l + jaw_l] += 0.5;
    joint_regressor[MINI_JAW * l + jaw_r] += 0.5;

    let mut jaw_weight: Vec<f64> = dirs
        .iter()
        .map(|d| if d.y < -0.25 && d.z > 0.0 { 1.0 } else { 0.0 })
        .collect();
    if !opts.binary_skin {
        let adjacency = vertex_adjacency(l, &faces);
        for _ in 0..SMOOTH_ITERS {
            jaw_weight = adjacency
                .iter()
                .enumerate()
                .map(|(vi, nbrs)| {
                    let mean = nbrs.iter().map(|&n| jaw_weight[n]).sum::<f64>() / nbrs.len() as f64;
                    0.5 * jaw_weight[vi] + 0.5 * mean
                })
                .collect();
        }
    }
    let skin_weights = jaw_weight.iter().flat_map(|&w| [1.0 - w, w]).collect();

    ModelAssets::new(AssetParts {
        template_vertices: template,
        faces,
        shape_basis,
        num_shape: NUM_SHAPE,
        expr_basis,
        num_expr: NUM_EXPR,
        joint_regressor,
        skin_weights,
        pose_corrective_basis: None,
        joint_parents: vec![MINI_NECK, MINI_NECK],
    })
    .expect("mini-model construction violates asset invariants")
}

fn random_wave(rng: &mut ChaCha8Rng, amp: std::ops::Range<f64>) -> (Vec3, f64, f64, f64) {
    let axis = loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            break v / n;
        }
    };
    let freq = rng.gen_range(1.0..3.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let amp = rng.gen_range(amp);
    (axis, freq, phase, amp)
}

fn nearest_dir(dirs: &[Vec3], target: &Vec3) -> usize {
    let t = target.normalize();
    let mut best = 0;
    for (i, d) in dirs.iter().enumerate() {
        if (d - t).norm_squared() < (dirs[best] - t).norm_squared() {
            best = i;
        }
    }
    best
}

fn vertex_adjacency(l: usize, faces: &[[usize; 3]]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); l];
    for f in faces {
        for k in 0..3 {
            adj[f[k]].insert(f[(k + 1) % 3]);
            adj[f[k]].insert(f[(k + 2) % 3]);
        }
    }
    adj
}

/// Unit icosphere with outward counter-clockwise faces.
fn icosphere(n_subdiv: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..n_subdiv {
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_count_and_outward_winding() {
        for n in 0..3 {
            let (v, f) = icosphere(n);
            assert_eq!(f.len(), 20 * 4usize.pow(n));
            assert_eq!(v.len(), 10 * 4usize.pow(n) + 2);
            for &[a, b, c] in &f {
                let normal = (v[b] - v[a]).cross(&(v[c] - v[a]));
                assert!(normal.dot(&(v[a] + v[b] + v[c])) > 0.0);
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        assert_eq!(make_mini_model(1, 2), make_mini_model(1, 2));
        assert_ne!(
            make_mini_model(1, 2).digest(),
            make_mini_model(2, 2).digest()
        );
    }

    #[test]
    fn skin_weight_rows_sum_to_one() {
        let m = make_mini_model(3, 2);
        for v in 0..m.num_vertices() {
            let s: f64 = (0..m.num_joints()).map(|j| m.skin_weight(v, j)).sum();
            assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn smoothing_produces_fractional_weights() {
        let smooth = make_mini_model(1, 2);
        let binary = make_mini_model_with(1, 2, MiniModelOptions { binary_skin: true });
        let frac = |m: &ModelAssets| {
            (0..m.num_vertices())
                .filter(|&v| {
                    let w = m.skin_weight(v, MINI_JAW);
                    w > 0.0 && w < 1.0
                })
                .count()
        };
        assert_eq!(frac(&binary), 0);
        assert!(frac(&smooth) > 0);
        assert!((0..binary.num_vertices()).any(|v| binary.skin_weight(v, MINI_JAW) == 1.0));
    }
}
