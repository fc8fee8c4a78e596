use std::path::Path;

use super::{read_file, write_file, ByteReader, FORMAT_VERSION};
use crate::error::{format_err, Result};
use crate::predictor::LinearPredictor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MFTP";

/// Header: magic, version, then `target_dim`, `input_dim` and `token_dim` as
/// u32; payload: weight (row-major), bias, mask embedding as f64.
pub fn encode_checkpoint(model: &LinearPredictor) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        20 + 8 * (model.weight.len() + model.bias.len() + model.mask_embedding.len()),
    );
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in [model.target_dim(), model.input_dim(), model.token_dim()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in model
        .weight
        .iter()
        .chain(&model.bias)
        .chain(&model.mask_embedding)
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<LinearPredictor> {
    let mut r = ByteReader::new(bytes);
    r.magic(CHECKPOINT_MAGIC)?;
    r.version()?;
    let dims_at = r.offset();
    let (target_dim, input_dim, token_dim) =
        (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if input_dim != 2 * token_dim {
        return Err(format_err(
            dims_at,
            format!("input dim {input_dim} must be twice token dim {token_dim}"),
        ));
    }
    let weight = r.f64s(target_dim * input_dim, "weight")?;
    let bias = r.f64s(target_dim, "bias")?;
    let emb = r.f64s(token_dim, "mask embedding")?;
    r.finish()?;
    LinearPredictor::from_parts(target_dim, token_dim, weight, bias, emb)
        .map_err(|e| format_err(dims_at, e.to_string()))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<LinearPredictor> {
    decode_checkpoint(&read_file(path.as_ref())?)
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &LinearPredictor) -> Result<()> {
    write_file(path.as_ref(), &encode_checkpoint(model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejections() {
        let model = LinearPredictor::random(3, 4, 0.5, 2);
        let bytes = encode_checkpoint(&model);
        assert_eq!(bytes.len(), 20 + 8 * (3 * 8 + 3 + 4));
        assert_eq!(decode_checkpoint(&bytes).unwrap(), model);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 8]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).is_err());
        let mut nan = bytes;
        let at = nan.len() - 8;
        nan[at..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_checkpoint(&nan).is_err());
    }
}
