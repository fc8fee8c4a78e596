//! Binary file formats. Byte layouts are documented in `FORMATS.md`.
//!
//! Every reader works on an in-memory byte slice, rejects a wrong magic or
//! version, validates declared sizes before allocating, and never reads past
//! the declared payload.

mod checkpoint;
mod clip;
mod mask;
mod pnm;
mod tensor;

use std::path::Path;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
};
pub use clip::{decode_clip, encode_clip, read_clip, write_clip, CLIP_MAGIC};
pub use mask::{decode_mask, encode_mask, read_mask, write_mask, MASK_MAGIC};
pub use pnm::{decode_pnm, encode_pnm, read_ppm, write_ppm};
pub use tensor::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, DType, Tensor, TensorData,
    TENSOR_MAGIC,
};

use crate::error::{format_err, Result};

/// Version written by, and the only version accepted by, every container.
pub const FORMAT_VERSION: u32 = 1;

/// Which container a file holds, judged from its leading bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Pnm,
    Clip,
    Mask,
    Tensor,
    Checkpoint,
}

pub fn sniff(bytes: &[u8]) -> Option<FileKind> {
    match bytes.get(..4)? {
        b"MFVC" => Some(FileKind::Clip),
        b"MFMK" => Some(FileKind::Mask),
        b"MFTN" => Some(FileKind::Tensor),
        b"MFTP" => Some(FileKind::Checkpoint),
        [b'P', b'5' | b'6', ..] => Some(FileKind::Pnm),
        _ => None,
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    Ok(std::fs::write(path, bytes)?)
}

/// Little-endian cursor that reports the byte offset of every failure.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(format_err(
                self.offset(),
                format!("truncated {what}: expected {n} bytes, found {available}"),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != magic {
            return Err(format_err(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(magic)
                ),
            ));
        }
        Ok(())
    }

    pub fn version(&mut self) -> Result<()> {
        let at = self.offset();
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(format_err(
                at,
                format!("unsupported version {v}, expected {FORMAT_VERSION}"),
            ));
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.take(4, "u32 field")?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.take(8, "u64 field")?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| format_err(self.offset(), format!("{what} size overflows")))?;
        Ok(self
            .take(bytes, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(format_err(
                self.offset(),
                format!(
                    "{} trailing bytes after payload",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        Ok(())
    }
}

/// Multiplies declared dimensions, failing on overflow.
pub(crate) fn checked_product(dims: &[usize], offset: u64) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| format_err(offset, format!("dimensions {dims:?} overflow")))
    })
}
