mod common;

use flowfield::encoding::{
    build_edited_encoding, build_encoding, prepare_encoder, sample_depths, Digests,
};
use flowfield::geometry::IndexedMesh;
use flowfield::headmodel::{apply_edit, evaluate_mesh, make_mini_model, RigidTransform};
use flowfield::surfaceflow::flow_batch;
use flowfield::tensorio::encode_tensor;
use flowfield::tensorio::encoding_to_tensor;
use flowfield::{
    with_workers, EncodeConfig, FlowEncoding, ModelAssets, MotionParams, SamplingMode, TriMesh,
    Vec3,
};

fn assets() -> ModelAssets {
    make_mini_model(3, 2)
}

fn source(assets: &ModelAssets) -> MotionParams {
    let mut p = MotionParams::zeros(assets);
    p.beta = vec![0.5, -0.3, 0.2, 0.0];
    p.psi = vec![0.2, 0.0, -0.1, 0.0];
    p
}

fn driving(assets: &ModelAssets) -> MotionParams {
    let mut p = MotionParams::zeros(assets);
    p.beta = vec![-0.4, 0.1, 0.0, 0.3];
    p.theta = vec![0.05, 0.2, 0.0, 0.25, 0.0, 0.0];
    p.psi = vec![0.6, 0.3, 0.0, -0.2];
    p
}

fn bytes(enc: &FlowEncoding) -> Vec<u8> {
    encode_tensor(&encoding_to_tensor(enc).unwrap(), Default::default()).unwrap()
}

#[test]
fn zero_motion_gives_zero_flow() {
    let a = assets();
    let p = source(&a);
    let cam = common::front_camera(64, 64);
    let enc = build_encoding(&a, &p, &p, &cam, &EncodeConfig::default()).unwrap();
    assert_eq!(enc.shape(), [64, 64, 60]);
    assert_eq!(enc.data.len(), 64 * 64 * 60);
    assert!(enc.max_abs() <= 1e-6, "{}", enc.max_abs());
    assert!(enc.meta.covered_pixels > 0);
}

#[test]
fn rigid_root_translation_matches_explicit_meshes() {
    let a = assets();
    let src = MotionParams::zeros(&a);
    let t = Vec3::new(0.02, -0.01, 0.03);
    let mut dri = MotionParams::zeros(&a);
    dri.root = Some(RigidTransform::from_translation(t).unwrap());
    let cam = common::front_camera(32, 32);
    let cfg = EncodeConfig::default().with_samples(8);
    let enc = build_encoding(&a, &src, &dri, &cam, &cfg).unwrap();

    // Independent path: evaluate both meshes directly and push the same ray
    // points through the batch field.
    let target = evaluate_mesh(&a, &dri).unwrap();
    let source_mesh = evaluate_mesh(&a, &src).unwrap();
    let encoder = prepare_encoder(&a, &src, &dri, &cam, &cfg).unwrap();
    let indexed = IndexedMesh::new(target).unwrap();
    for row in (0..32).step_by(3) {
        for col in (0..32).step_by(3) {
            let pts = encoder.target_points(col, row).unwrap();
            let flows = flow_batch(&pts, &indexed, &source_mesh).unwrap();
            for (k, f) in flows.iter().enumerate() {
                let stored = enc.flow(col, row, k);
                for c in 0..3 {
                    assert_eq!(stored[c], f.flow[c] as f32);
                }
                assert!((f.flow + t).amax() < 1e-9);
            }
        }
    }
}

#[test]
fn stored_flows_match_batch_field_everywhere() {
    let a = assets();
    let (src, dri) = (source(&a), driving(&a));
    let cam = common::front_camera(24, 20);
    let cfg = EncodeConfig::default().with_samples(6);
    let encoder = prepare_encoder(&a, &src, &dri, &cam, &cfg).unwrap();
    let enc = encoder.encode(Digests::default()).unwrap();
    for row in 0..20 {
        for col in 0..24 {
            let pts = encoder.target_points(col, row).unwrap();
            let batch = flow_batch(&pts, encoder.target(), encoder.source()).unwrap();
            let per_pixel = encoder.pixel_flows(col, row).unwrap();
            for (k, (b, p)) in batch.iter().zip(&per_pixel).enumerate() {
                assert!((b.flow - p.flow).amax() <= 1e-12);
                let stored = enc.flow(col, row, k);
                for c in 0..3 {
                    assert_eq!(stored[c], b.flow[c] as f32);
                }
            }
        }
    }
}

#[test]
fn edited_encoding_equals_pre_edited_driving() {
    let a = assets();
    let (src, dri) = (source(&a), driving(&a));
    let cam = common::front_camera(32, 32);
    let cfg = EncodeConfig::default();
    let dt = [0.0, -0.1, 0.05, 0.1, 0.0, 0.0];
    let dp = [0.1, 0.0, 0.2, 0.0];

    let edited = build_edited_encoding(&a, &src, &dri, &dt, &dp, &cam, &cfg).unwrap();
    let pre = build_encoding(&a, &src, &apply_edit(&dri, &dt, &dp).unwrap(), &cam, &cfg).unwrap();
    assert_eq!(bytes(&edited), bytes(&pre));

    let plain = build_encoding(&a, &src, &dri, &cam, &cfg).unwrap();
    let zero = build_edited_encoding(&a, &src, &dri, &[0.0; 6], &[0.0; 4], &cam, &cfg).unwrap();
    assert_eq!(bytes(&plain), bytes(&zero));
    assert_ne!(plain.data, edited.data);
}

#[test]
fn sampling_mode_changes_on_head_flows_only() {
    let a = assets();
    let (src, dri) = (source(&a), driving(&a));
    let cam = common::front_camera(32, 32);
    let cfg = EncodeConfig::default().with_samples(10);
    let guided = build_encoding(&a, &src, &dri, &cam, &cfg).unwrap();
    let uniform =
        build_encoding(&a, &src, &dri, &cam, &cfg.with_mode(SamplingMode::Uniform)).unwrap();
    let encoder = prepare_encoder(&a, &src, &dri, &cam, &cfg).unwrap();
    let c = 30;
    let mut differing = 0;
    for row in 0..32 {
        for col in 0..32 {
            let i = (row * 32 + col) * c;
            let (g, u) = (&guided.data[i..i + c], &uniform.data[i..i + c]);
            if encoder.depth().is_covered(col, row) {
                differing += (g != u) as usize;
            } else {
                assert_eq!(g, u);
            }
        }
    }
    assert!(differing > 0);
}

#[test]
fn encoding_independent_of_worker_count() {
    let a = assets();
    let (src, dri) = (source(&a), driving(&a));
    let cam = common::front_camera(40, 36);
    let cfg = EncodeConfig::default().with_samples(8);
    let one = with_workers(1, || build_encoding(&a, &src, &dri, &cam, &cfg).unwrap());
    let many = with_workers(8, || build_encoding(&a, &src, &dri, &cam, &cfg).unwrap());
    assert_eq!(bytes(&one), bytes(&many));
}

#[test]
fn jitter_is_seeded() {
    let a = assets();
    let (src, dri) = (source(&a), driving(&a));
    let cam = common::front_camera(16, 16);
    let mut cfg = EncodeConfig::default().with_samples(5);
    cfg.sampling.jitter_seed = Some(9);
    let x = build_encoding(&a, &src, &dri, &cam, &cfg).unwrap();
    let y = with_workers(3, || build_encoding(&a, &src, &dri, &cam, &cfg).unwrap());
    assert_eq!(bytes(&x), bytes(&y));
    cfg.sampling.jitter_seed = Some(10);
    let z = build_encoding(&a, &src, &dri, &cam, &cfg).unwrap();
    assert_ne!(x.data, z.data);
}

#[test]
fn guided_samples_bracket_the_surface() {
    let a = assets();
    let p = source(&a);
    let cam = common::front_camera(32, 32);
    let cfg = EncodeConfig::default();
    let encoder = prepare_encoder(&a, &p, &p, &cam, &cfg).unwrap();
    let d = encoder.depth();
    let hit = d.get(16, 16).unwrap();
    assert!(hit > 0.0);
    let s = sample_depths(d, 16, 16, &cfg.sampling, cam.origin_depth()).unwrap();
    let delta = cfg.sampling.delta;
    assert!(s.iter().all(|&x| x > hit - delta && x < hit + delta));
    assert!(s.windows(2).all(|w| w[0] < w[1]));

    let miss = sample_depths(d, 0, 0, &cfg.sampling, cam.origin_depth()).unwrap();
    let (lo, hi) = encoder.sampler().fallback_range();
    assert!((lo - (cam.origin_depth() + cfg.sampling.d_near)).abs() < 1e-12);
    assert!(miss.iter().all(|&x| x > lo && x < hi));
}

#[test]
fn topology_mismatch_is_rejected() {
    let a = assets();
    let p = MotionParams::zeros(&a);
    let m = evaluate_mesh(&a, &p).unwrap();
    let other = TriMesh::new(m.vertices().to_vec(), m.faces()[1..].to_vec()).unwrap();
    let r = flowfield::encoding::FlowEncoder::new(
        m,
        other,
        common::front_camera(8, 8),
        EncodeConfig::default(),
    );
    assert!(r.is_err());
}
