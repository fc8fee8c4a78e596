use std::path::Path;

use super::{checked_product, read_file, write_file, ByteReader, FORMAT_VERSION};
use crate::error::{format_err, Result};
use crate::masking::MaskMap;

pub const MASK_MAGIC: &[u8; 4] = b"MFMK";

fn row_bytes(w: usize) -> usize {
    w.div_ceil(8)
}

/// Bits are packed MSB-first; every row starts on a fresh byte.
pub fn encode_mask(m: &MaskMap) -> Vec<u8> {
    let (t, h, w) = m.dims();
    let mut out = Vec::with_capacity(20 + t * h * row_bytes(w));
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in [t, h, w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for row in m.bits().chunks(w) {
        for byte_bits in row.chunks(8) {
            let byte = byte_bits
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, b)| acc | (u8::from(*b) << (7 - k)));
            out.push(byte);
        }
    }
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<MaskMap> {
    let mut r = ByteReader::new(bytes);
    r.magic(MASK_MAGIC)?;
    r.version()?;
    let dims_at = r.offset();
    let (t, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if t == 0 || h == 0 || w == 0 {
        return Err(format_err(
            dims_at,
            format!("mask dims {t}x{h}x{w} must be positive"),
        ));
    }
    let rows = checked_product(&[t, h], dims_at)?;
    let payload_len = checked_product(&[rows, row_bytes(w)], dims_at)?;
    let payload = r.take(payload_len, "mask payload")?;
    r.finish()?;
    let mut bits = Vec::with_capacity(rows * w);
    for (row_idx, row) in payload.chunks(row_bytes(w)).enumerate() {
        for x in 0..w {
            bits.push(row[x / 8] & (0x80 >> (x % 8)) != 0);
        }
        let used = w % 8;
        if used != 0 && row[row.len() - 1] & (0xFF >> used) != 0 {
            let at = dims_at + 12 + ((row_idx + 1) * row.len()) as u64 - 1;
            return Err(format_err(at, "nonzero padding bits"));
        }
    }
    MaskMap::from_bits(t, h, w, bits).map_err(|e| format_err(dims_at, e.to_string()))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskMap> {
    decode_mask(&read_file(path.as_ref())?)
}

pub fn write_mask(path: impl AsRef<Path>, m: &MaskMap) -> Result<()> {
    write_file(path.as_ref(), &encode_mask(m))
}
