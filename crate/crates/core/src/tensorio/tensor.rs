//! `FTEN` tensor files.
//!
//! ```text
//! offset        size       field
//! 0             4          magic "FTEN"
//! 4             2          format version (u16 LE) = 1
//! 6             2          rank r (u16 LE)
//! 8             8 * r      dims (u64 LE each), outermost first
//! 8 + 8r        2          dtype code (u16 LE): 1 = f32, 2 = u32, 3 = f64
//! 10 + 8r       4          metadata length m (u32 LE)
//! 14 + 8r       m          metadata, UTF-8 JSON (m = 0 means none)
//! 14 + 8r + m   ...        row-major payload, little-endian elements
//! ```
//!
//! The payload must be exactly `product(dims) * element_size` bytes.

use std::path::Path;

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"FTEN";
pub const TENSOR_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum DType {
    F32 = 1,
    U32 = 2,
    F64 = 3,
}

impl DType {
    pub fn code(self) -> u16 {
        self as u16
    }

    pub fn from_code(code: u16) -> Result<Self> {
        match code {
            1 => Ok(DType::F32),
            2 => Ok(DType::U32),
            3 => Ok(DType::F64),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 | DType::U32 => 4,
            DType::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F32 => "f32",
            DType::U32 => "u32",
            DType::F64 => "f64",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U32(Vec<u32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::U32(_) => DType::U32,
            TensorData::F64(_) => DType::F64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::U32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn all_finite(&self) -> bool {
        match self {
            TensorData::F32(v) => v.iter().all(|x| x.is_finite()),
            TensorData::U32(_) => true,
            TensorData::F64(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

/// Dense row-major tensor with an optional JSON metadata string.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
    pub meta: String,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let n = element_count(&dims)?;
        if n != data.len() {
            return Err(Error::dimension("tensor payload", n, data.len()));
        }
        Ok(Tensor {
            dims,
            data,
            meta: String::new(),
        })
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = meta.into();
        self
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("dims overflow".into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteOptions {
    pub allow_nonfinite: bool,
}

pub fn encode_tensor(t: &Tensor, opts: WriteOptions) -> Result<Vec<u8>> {
    let n = element_count(&t.dims)?;
    if n != t.data.len() {
        return Err(Error::dimension("tensor payload", n, t.data.len()));
    }
    if !opts.allow_nonfinite && !t.data.all_finite() {
        return Err(Error::NonFinite("tensor payload".into()));
    }
    let rank = u16::try_from(t.dims.len()).map_err(|_| Error::Format("rank exceeds u16".into()))?;
    let meta_len =
        u32::try_from(t.meta.len()).map_err(|_| Error::Format("metadata exceeds u32".into()))?;
    let elem = t.dtype().size();

    let mut out = Vec::with_capacity(14 + 8 * t.dims.len() + t.meta.len() + n * elem);
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.extend_from_slice(&rank.to_le_bytes());
    for &d in &t.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&t.dtype().code().to_le_bytes());
    out.extend_from_slice(&meta_len.to_le_bytes());
    out.extend_from_slice(t.meta.as_bytes());
    match &t.data {
        TensorData::F32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::U32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptPayload(format!("file truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parses a complete tensor file; trailing bytes are an error.
pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur
        .take(4, "magic")
        .map_err(|_| Error::Format("file too short for magic".into()))?;
    if magic != TENSOR_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected \"FTEN\""
        )));
    }
    let version = cur.u16("version")?;
    if version != TENSOR_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rank = cur.u16("rank")? as usize;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        let d = cur.u64("dims")?;
        dims.push(usize::try_from(d).map_err(|_| Error::Format("dims overflow".into()))?);
    }
    let dtype = DType::from_code(cur.u16("dtype")?)?;
    let meta_len = cur.u32("metadata length")? as usize;
    let meta = std::str::from_utf8(cur.take(meta_len, "metadata")?)
        .map_err(|_| Error::Format("metadata is not UTF-8".into()))?
        .to_string();
    if !meta.is_empty() {
        serde_json::from_str::<serde_json::Value>(&meta)
            .map_err(|e| Error::Format(format!("metadata is not JSON: {e}")))?;
    }

    let n = element_count(&dims)?;
    let expected = n
        .checked_mul(dtype.size())
        .ok_or_else(|| Error::Format("dims overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() != expected {
        return Err(Error::CorruptPayload(format!(
            "expected {expected} payload bytes for dims {dims:?} ({}), found {}",
            dtype.name(),
            payload.len()
        )));
    }
    let data = match dtype {
        DType::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        DType::U32 => TensorData::U32(
            payload
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        DType::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(Tensor { dims, data, meta })
}

/// Writes via a sibling temporary file and a rename, so readers never see a
/// partially written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write_tensor_with(path, t, WriteOptions::default())
}

pub fn write_tensor_with(path: &Path, t: &Tensor, opts: WriteOptions) -> Result<()> {
    write_atomic(path, &encode_tensor(t, opts)?)
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}
