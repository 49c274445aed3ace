mod common;

use flowfield::encoding::build_encoding;
use flowfield::headmodel::{evaluate_vertices, make_mini_model};
use flowfield::tensorio::{
    camera_to_json, decode_tensor, encode_tensor, load_assets, load_camera, load_config,
    load_params, params_to_json, read_encoding, read_tensor, save_assets, save_json,
    write_encoding, write_tensor, Tensor, TensorData,
};
use flowfield::{EncodeConfig, Error, ErrorClass, MotionParams, SamplingMode, Vec3};
use proptest::prelude::*;
use serde_json::json;

#[test]
fn encoding_file_round_trips_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let a = make_mini_model(5, 1);
    let src = MotionParams::zeros(&a);
    let mut dri = MotionParams::zeros(&a);
    dri.theta[4] = 0.3;
    dri.psi[0] = 0.4;
    let cam = common::front_camera(20, 16);
    let enc = build_encoding(
        &a,
        &src,
        &dri,
        &cam,
        &EncodeConfig::default().with_samples(4),
    )
    .unwrap();

    let path = dir.path().join("flow.ften");
    write_encoding(&path, &enc).unwrap();
    let back = read_encoding(&path).unwrap();
    assert_eq!(back.meta, enc.meta);
    assert!(back
        .data
        .iter()
        .zip(&enc.data)
        .all(|(x, y)| x.to_bits() == y.to_bits()));

    let first = std::fs::read(&path).unwrap();
    write_encoding(&path, &back).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());

    // Header layout: magic, version, rank, dims, dtype.
    assert_eq!(&first[..4], b"FTEN");
    assert_eq!(u16::from_le_bytes([first[4], first[5]]), 1);
    assert_eq!(u16::from_le_bytes([first[6], first[7]]), 3);
    assert_eq!(u64::from_le_bytes(first[8..16].try_into().unwrap()), 16);
    assert_eq!(u64::from_le_bytes(first[16..24].try_into().unwrap()), 20);
    assert_eq!(u64::from_le_bytes(first[24..32].try_into().unwrap()), 12);
    assert_eq!(u16::from_le_bytes([first[32], first[33]]), 1);
}

#[test]
fn asset_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = make_mini_model(11, 2);
    let path = dir.path().join("model.fasc");
    save_assets(&path, &a).unwrap();
    let b = load_assets(&path).unwrap();
    assert_eq!(a.digest(), b.digest());
    let mut p = MotionParams::zeros(&a);
    p.beta[1] = 0.7;
    p.theta[3] = 0.2;
    assert_eq!(
        evaluate_vertices(&a, &p).unwrap(),
        evaluate_vertices(&b, &p).unwrap()
    );
}

#[test]
fn corrupt_files_are_io_class_errors() {
    let dir = tempfile::tempdir().unwrap();
    let t = Tensor::new(vec![4], TensorData::F32(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
    let bytes = encode_tensor(&t, Default::default()).unwrap();

    let truncated = dir.path().join("short.ften");
    std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
    let e = read_tensor(&truncated).unwrap_err();
    assert!(matches!(e, Error::CorruptPayload(_)), "{e}");
    assert_eq!(e.class(), ErrorClass::Io);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    let magic = dir.path().join("magic.ften");
    std::fs::write(&magic, &bad).unwrap();
    let e = read_tensor(&magic).unwrap_err();
    assert!(matches!(e, Error::Format(_)));
    assert_eq!(e.class(), ErrorClass::Io);

    let missing = read_tensor(&dir.path().join("nope.ften")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));

    let fasc = dir.path().join("bad.fasc");
    let mut asset_bytes = flowfield::tensorio::encode_assets(&make_mini_model(1, 0)).unwrap();
    asset_bytes.truncate(asset_bytes.len() / 2);
    std::fs::write(&fasc, &asset_bytes).unwrap();
    assert_eq!(load_assets(&fasc).unwrap_err().class(), ErrorClass::Io);
}

#[test]
fn json_documents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = make_mini_model(2, 0);
    let mut p = MotionParams::zeros(&a);
    p.beta = vec![0.1, 0.2, 0.3, 0.4];
    p.theta[1] = 0.5;
    p.root = Some(
        flowfield::RigidTransform::new(common::rotation(Vec3::y(), 20.0), Vec3::new(0.0, 0.1, 0.2))
            .unwrap(),
    );
    let pp = dir.path().join("p.json");
    save_json(&pp, &params_to_json(&p)).unwrap();
    let q = load_params(&pp).unwrap();
    assert_eq!(q.beta, p.beta);
    assert_eq!(q.theta, p.theta);
    let (r1, r2) = (p.root.unwrap(), q.root.unwrap());
    assert!((r1.rotation() - r2.rotation()).amax() < 1e-15);
    assert_eq!(r1.translation(), r2.translation());

    let cam = common::front_camera(64, 48);
    let cp = dir.path().join("cam.json");
    save_json(&cp, &camera_to_json(&cam)).unwrap();
    let cam2 = load_camera(&cp).unwrap();
    let x = cam.backproject(10.0, 20.0, 0.8).unwrap();
    assert!((cam2.backproject(10.0, 20.0, 0.8).unwrap() - x).amax() < 1e-15);
    assert_eq!((cam2.width(), cam2.height()), (64, 48));

    let cfgp = dir.path().join("cfg.json");
    save_json(
        &cfgp,
        &json!({"n_samples": 7, "mode": "uniform", "delta": 0.02}),
    )
    .unwrap();
    let cfg = load_config(&cfgp).unwrap();
    assert_eq!(cfg.sampling.n_samples, 7);
    assert_eq!(cfg.sampling.mode, SamplingMode::Uniform);
    assert_eq!(cfg.sampling.d_far, EncodeConfig::default().sampling.d_far);
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    save_json(&path, &json!({"beta": [0.0, "x"], "theta": [], "psi": []})).unwrap();
    let e = load_params(&path).unwrap_err();
    assert!(e.to_string().contains("beta[1]"), "{e}");
    assert_eq!(e.class(), ErrorClass::Validation);

    save_json(&path, &json!({"n_samples": 4, "bogus": 1})).unwrap();
    let e = load_config(&path).unwrap_err();
    assert!(e.to_string().contains("bogus"), "{e}");

    save_json(
        &path,
        &json!({"K": [[1, 0, 0], [0, 1, 0]], "H": [], "width": 4, "height": 4}),
    )
    .unwrap();
    let e = load_camera(&path).unwrap_err();
    assert!(e.to_string().contains('K'), "{e}");
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    (prop::collection::vec(0usize..5, 0..4), 0u8..3, "[a-z]{0,8}").prop_flat_map(
        |(dims, kind, key)| {
            let n: usize = dims.iter().product();
            let meta = if key.is_empty() {
                String::new()
            } else {
                format!("{{\"{key}\":1}}")
            };
            let data = match kind {
                0 => prop::collection::vec(-1e6f32..1e6, n)
                    .prop_map(TensorData::F32)
                    .boxed(),
                1 => prop::collection::vec(any::<u32>(), n)
                    .prop_map(TensorData::U32)
                    .boxed(),
                _ => prop::collection::vec(-1e6f64..1e6, n)
                    .prop_map(TensorData::F64)
                    .boxed(),
            };
            data.prop_map(move |d| {
                Tensor::new(dims.clone(), d)
                    .unwrap()
                    .with_meta(meta.clone())
            })
        },
    )
}

proptest! {
    #[test]
    fn tensors_round_trip(t in tensor_strategy()) {
        let bytes = encode_tensor(&t, Default::default()).unwrap();
        let back = decode_tensor(&bytes).unwrap();
        prop_assert_eq!(&back.dims, &t.dims);
        prop_assert_eq!(&back.meta, &t.meta);
        prop_assert_eq!(encode_tensor(&back, Default::default()).unwrap(), bytes);
    }

    #[test]
    fn any_truncation_or_extension_is_rejected(t in tensor_strategy(), cut in 1usize..64, extra in 1usize..4) {
        let bytes = encode_tensor(&t, Default::default()).unwrap();
        let cut = cut.min(bytes.len());
        prop_assert!(decode_tensor(&bytes[..bytes.len() - cut]).is_err());
        let mut longer = bytes.clone();
        longer.extend(std::iter::repeat(0u8).take(extra));
        prop_assert!(decode_tensor(&longer).is_err());
    }
}

#[test]
fn files_survive_rewrite() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ften");
    let t = Tensor::new(vec![2, 2], TensorData::U32(vec![1, 2, 3, 4])).unwrap();
    write_tensor(&path, &t).unwrap();
    write_tensor(&path, &t).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert_eq!(read_tensor(&path).unwrap(), t);
}
