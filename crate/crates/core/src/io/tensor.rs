use std::path::Path;

use super::{checked_product, read_file, write_file, ByteReader, FORMAT_VERSION};
use crate::error::{format_err, invalid, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"MFTN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn code(self) -> u32 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }
}

/// Row-major tensor, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(invalid(format!(
                "tensor dims {dims:?} hold {n} values, data has {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn f64(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::new(dims, TensorData::F64(values))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|x| f64::from(*x)).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * t.dims.len() + t.data.len() * t.data.dtype().size());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&t.data.dtype().code().to_le_bytes());
    out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
    for d in &t.dims {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    match &t.data {
        TensorData::F32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let mut r = ByteReader::new(bytes);
    r.magic(TENSOR_MAGIC)?;
    r.version()?;
    let at = r.offset();
    let code = r.u32()?;
    let dtype = DType::from_code(code)
        .ok_or_else(|| format_err(at, format!("unknown dtype code {code}")))?;
    let rank = r.u32()? as usize;
    let dims_at = r.offset();
    // each declared axis needs 8 header bytes; reject absurd ranks before allocating
    if rank > bytes.len() / 8 {
        return Err(format_err(
            dims_at,
            format!("rank {rank} exceeds file size"),
        ));
    }
    let dims = (0..rank)
        .map(|_| {
            let d = r.u64()?;
            usize::try_from(d).map_err(|_| format_err(dims_at, format!("dimension {d} overflows")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = checked_product(&dims, dims_at)?;
    let payload_len = n
        .checked_mul(dtype.size())
        .ok_or_else(|| format_err(dims_at, "payload size overflows"))?;
    let payload = r.take(payload_len, "tensor payload")?;
    r.finish()?;
    let data = match dtype {
        DType::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
        ),
        DType::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        ),
    };
    Ok(Tensor { dims, data })
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_tensor(&read_file(path.as_ref())?)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    write_file(path.as_ref(), &encode_tensor(t))
}
