//! JSON documents for motion parameters, cameras and encode configs.
//!
//! Params: `{"beta": [..], "theta": [..], "psi": [..], "root_R": [[3x3]], "root_t": [3]}`
//! with both root keys optional (identity rotation, zero translation).
//! Camera: `{"K": [[3x3]], "H": [[3x4]], "width": W, "height": H}`, where `H`
//! is camera-to-world.

use std::path::Path;

use nalgebra::Matrix3x4;
use serde_json::{json, Map, Value};

use crate::camera::Camera;
use crate::encoding::EncodeConfig;
use crate::error::{Error, Result};
use crate::headmodel::{MotionParams, RigidTransform};
use crate::{Mat3, Vec3};

fn schema(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        reason: reason.into(),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| schema("$", format!("invalid JSON: {e}")))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(path, "expected an object"))
}

fn reject_unknown(obj: &Map<String, Value>, known: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(schema(k.clone(), "unknown field")),
        None => Ok(()),
    }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| schema(path, "expected a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(schema(path, "must be finite"))
    }
}

fn number_array(v: &Value, path: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| schema(path, "expected an array of numbers"))?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn fixed_array<const N: usize>(v: &Value, path: &str) -> Result<[f64; N]> {
    let a = number_array(v, path)?;
    a.as_slice()
        .try_into()
        .map_err(|_| schema(path, format!("expected {N} numbers, found {}", a.len())))
}

fn matrix_rows<const R: usize, const C: usize>(v: &Value, path: &str) -> Result<[[f64; C]; R]> {
    let rows = v
        .as_array()
        .ok_or_else(|| schema(path, format!("expected a {R}x{C} nested array")))?;
    if rows.len() != R {
        return Err(schema(
            path,
            format!("expected {R} rows, found {}", rows.len()),
        ));
    }
    let mut out = [[0.0; C]; R];
    for (i, row) in rows.iter().enumerate() {
        out[i] = fixed_array::<C>(row, &format!("{path}[{i}]"))?;
    }
    Ok(out)
}

fn mat3(rows: [[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

fn usize_field(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(path, "expected a non-negative integer"))
}

pub fn params_from_json(v: &Value) -> Result<MotionParams> {
    let obj = object(v, "$")?;
    reject_unknown(obj, &["beta", "theta", "psi", "root_R", "root_t"])?;
    let field = |k: &str| {
        obj.get(k)
            .ok_or_else(|| schema(k, "missing required field"))
    };
    let beta = number_array(field("beta")?, "beta")?;
    let theta = number_array(field("theta")?, "theta")?;
    let psi = number_array(field("psi")?, "psi")?;
    if theta.len() % 3 != 0 {
        return Err(schema(
            "theta",
            "length must be a multiple of 3 (axis-angle per joint)",
        ));
    }
    let rot = obj
        .get("root_R")
        .map(|r| matrix_rows::<3, 3>(r, "root_R"))
        .transpose()?;
    let trans = obj
        .get("root_t")
        .map(|t| fixed_array::<3>(t, "root_t"))
        .transpose()?;
    let root = if rot.is_none() && trans.is_none() {
        None
    } else {
        let r = rot.map(mat3).unwrap_or_else(Mat3::identity);
        let t = trans.map(Vec3::from).unwrap_or_else(Vec3::zeros);
        Some(RigidTransform::new(r, t).map_err(|e| match e {
            Error::Invalid { reason, .. } => schema("root_R", reason),
            other => other,
        })?)
    };
    Ok(MotionParams {
        beta,
        theta,
        psi,
        root,
    })
}

pub fn params_to_json(p: &MotionParams) -> Value {
    let mut v = json!({ "beta": p.beta, "theta": p.theta, "psi": p.psi });
    if let Some(root) = &p.root {
        let r = root.rotation();
        v["root_R"] = json!((0..3)
            .map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]])
            .collect::<Vec<_>>());
        v["root_t"] = json!(root.translation().as_slice());
    }
    v
}

pub fn camera_from_json(v: &Value) -> Result<Camera> {
    let obj = object(v, "$")?;
    reject_unknown(obj, &["K", "H", "width", "height"])?;
    let field = |k: &str| {
        obj.get(k)
            .ok_or_else(|| schema(k, "missing required field"))
    };
    let k = mat3(matrix_rows::<3, 3>(field("K")?, "K")?);
    let h_rows = matrix_rows::<3, 4>(field("H")?, "H")?;
    let h = Matrix3x4::from_fn(|i, j| h_rows[i][j]);
    let width = usize_field(field("width")?, "width")?;
    let height = usize_field(field("height")?, "height")?;
    Camera::from_matrices(&k, &h, width, height).map_err(|e| match e {
        Error::Invalid { field, reason } => schema(field, reason),
        other => other,
    })
}

pub fn camera_to_json(cam: &Camera) -> Value {
    let k = cam.intrinsics();
    let h = cam.extrinsics();
    json!({
        "K": (0..3).map(|i| (0..3).map(|j| k[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "H": (0..3).map(|i| (0..4).map(|j| h[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "width": cam.width(),
        "height": cam.height(),
    })
}

pub fn config_from_json(v: &Value) -> Result<EncodeConfig> {
    let cfg: EncodeConfig =
        serde_json::from_value(v.clone()).map_err(|e| schema("config", e.to_string()))?;
    cfg.sampling.validate().map_err(|e| match e {
        Error::Invalid { field, reason } => schema(field, reason),
        other => other,
    })?;
    Ok(cfg)
}

pub fn load_params(path: &Path) -> Result<MotionParams> {
    params_from_json(&read_json(path)?)
}

pub fn load_camera(path: &Path) -> Result<Camera> {
    camera_from_json(&read_json(path)?)
}

pub fn load_config(path: &Path) -> Result<EncodeConfig> {
    config_from_json(&read_json(path)?)
}

/// A plain JSON array of numbers, e.g. a pose or expression offset.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    number_array(&read_json(path)?, "$")
}

pub fn save_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("JSON value serializes");
    super::tensor::write_atomic(path, text.as_bytes())
}
