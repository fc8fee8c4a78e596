use std::path::Path;

use super::{checked_product, read_file, write_file, ByteReader, FORMAT_VERSION};
use crate::error::{format_err, Result};
use crate::imaging::{Image, VideoClip};

pub const CLIP_MAGIC: &[u8; 4] = b"MFVC";

/// Rounds `[0, 1]` intensities to 8-bit, clamping out-of-range values.
pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub(crate) fn dequantize(b: u8) -> f64 {
    f64::from(b) / 255.0
}

pub fn encode_clip(clip: &VideoClip) -> Vec<u8> {
    let (w, h, c, n) = (
        clip.width(),
        clip.height(),
        clip.channels(),
        clip.frame_count(),
    );
    let mut out = Vec::with_capacity(24 + n * c * h * w);
    out.extend_from_slice(CLIP_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in [n, h, w, c] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for f in clip.frames() {
        out.extend(f.data().iter().map(|v| quantize(*v)));
    }
    out
}

pub fn decode_clip(bytes: &[u8]) -> Result<VideoClip> {
    let mut r = ByteReader::new(bytes);
    r.magic(CLIP_MAGIC)?;
    r.version()?;
    let dims_at = r.offset();
    let (n, h, w, c) = (
        r.u32()? as usize,
        r.u32()? as usize,
        r.u32()? as usize,
        r.u32()? as usize,
    );
    if n == 0 || h == 0 || w == 0 || c == 0 {
        return Err(format_err(
            dims_at,
            format!("clip dims {n}x{h}x{w}x{c} must be positive"),
        ));
    }
    let frame_len = checked_product(&[c, h, w], dims_at)?;
    let payload = r.take(checked_product(&[n, frame_len], dims_at)?, "clip payload")?;
    r.finish()?;
    let frames = payload
        .chunks(frame_len)
        .map(|f| Image::new(w, h, c, f.iter().map(|b| dequantize(*b)).collect()))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames)
}

pub fn read_clip(path: impl AsRef<Path>) -> Result<VideoClip> {
    decode_clip(&read_file(path.as_ref())?)
}

pub fn write_clip(path: impl AsRef<Path>, clip: &VideoClip) -> Result<()> {
    write_file(path.as_ref(), &encode_clip(clip))
}
