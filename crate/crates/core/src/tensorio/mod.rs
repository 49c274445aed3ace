//! On-disk formats: `FTEN` tensors, `FASC` asset containers, and JSON inputs.

mod assets;
mod json;
mod tensor;

use std::path::Path;

pub use assets::{
    decode_assets, encode_assets, load_assets, save_assets, AssetManifest, ManifestEntry,
    ASSET_MAGIC, ASSET_VERSION,
};
pub use json::{
    camera_from_json, camera_to_json, config_from_json, load_camera, load_config, load_params,
    load_vector, params_from_json, params_to_json, save_json,
};
pub use tensor::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, write_tensor_with, DType, Tensor,
    TensorData, WriteOptions, TENSOR_MAGIC, TENSOR_VERSION,
};

use crate::camera::DepthMap;
use crate::encoding::{EncodingMeta, FlowEncoding, ENCODING_KIND};
use crate::error::{Error, Result};

pub fn encoding_to_tensor(enc: &FlowEncoding) -> Result<Tensor> {
    let meta = serde_json::to_string(&enc.meta).expect("metadata serializes");
    Ok(Tensor::new(enc.shape().to_vec(), TensorData::F32(enc.data.clone()))?.with_meta(meta))
}

pub fn encoding_from_tensor(t: Tensor) -> Result<FlowEncoding> {
    let meta: EncodingMeta = serde_json::from_str(&t.meta).map_err(|e| Error::Schema {
        path: "metadata".into(),
        reason: e.to_string(),
    })?;
    if meta.kind != ENCODING_KIND {
        return Err(Error::Schema {
            path: "metadata.kind".into(),
            reason: format!("expected {ENCODING_KIND:?}, found {:?}", meta.kind),
        });
    }
    let expected = [meta.height, meta.width, 3 * meta.n_samples];
    if t.dims != expected {
        return Err(Error::Schema {
            path: "dims".into(),
            reason: format!("metadata implies {expected:?}, tensor is {:?}", t.dims),
        });
    }
    match t.data {
        TensorData::F32(data) => Ok(FlowEncoding { data, meta }),
        other => Err(Error::Format(format!(
            "flow encodings are f32, found {}",
            other.dtype().name()
        ))),
    }
}

pub fn write_encoding(path: &Path, enc: &FlowEncoding) -> Result<()> {
    write_tensor(path, &encoding_to_tensor(enc)?)
}

pub fn read_encoding(path: &Path) -> Result<FlowEncoding> {
    encoding_from_tensor(read_tensor(path)?)
}

/// Depth map as an `H x W` f32 tensor.
pub fn depth_to_tensor(d: &DepthMap) -> Result<Tensor> {
    Tensor::new(
        vec![d.height(), d.width()],
        TensorData::F32(d.data().iter().map(|&x| x as f32).collect()),
    )
    .map(|t| t.with_meta(r#"{"kind":"depth_map","unit":"m"}"#))
}
