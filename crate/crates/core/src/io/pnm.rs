//! Binary netpbm: P5 (gray) and P6 (RGB), maxval 255 only.

use std::path::Path;

use super::clip::{dequantize, quantize};
use super::{read_file, write_file};
use crate::error::{format_err, invalid, Result};
use crate::imaging::Image;

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    data_start: usize,
}

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(b'#') => {
                while let Some(b) = bytes.get(pos) {
                    pos += 1;
                    if *b == b'\n' || *b == b'\r' {
                        break;
                    }
                }
            }
            _ => return pos,
        }
    }
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    *pos = skip_space_and_comments(bytes, *pos);
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(format_err(start as u64, format!("expected {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format_err(start as u64, format!("{what} out of range")))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(format_err(0, "not a binary PGM/PPM (expected P5 or P6)")),
    };
    let mut pos = 2;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) && bytes.get(pos) != Some(&b'#') {
        return Err(format_err(pos as u64, "expected whitespace after magic"));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval_at = pos;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(format_err(
            maxval_at as u64,
            format!("image size {width}x{height} must be positive"),
        ));
    }
    if maxval != 255 {
        return Err(format_err(
            maxval_at as u64,
            format!("unsupported maxval {maxval}, only 255 is accepted"),
        ));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(format_err(
                pos as u64,
                "expected single whitespace before raster",
            ))
        }
    }
    Ok(Header {
        channels,
        width,
        height,
        data_start: pos,
    })
}

/// Decodes a P5/P6 image to `[0, 1]` intensities (`v / 255`).
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let hdr = parse_header(bytes)?;
    let n = hdr
        .width
        .checked_mul(hdr.height)
        .and_then(|p| p.checked_mul(hdr.channels))
        .ok_or_else(|| format_err(0, "image size overflows"))?;
    let available = bytes.len() - hdr.data_start;
    if available < n {
        return Err(format_err(
            hdr.data_start as u64,
            format!("truncated raster: expected {n} bytes, found {available}"),
        ));
    }
    if available > n {
        return Err(format_err(
            (hdr.data_start + n) as u64,
            format!("{} trailing bytes after raster", available - n),
        ));
    }
    let raster = &bytes[hdr.data_start..];
    let plane = hdr.width * hdr.height;
    // interleaved samples to channel-planar
    let mut data = vec![0.0; n];
    for (i, b) in raster.iter().enumerate() {
        let (pixel, c) = (i / hdr.channels, i % hdr.channels);
        data[c * plane + pixel] = dequantize(*b);
    }
    Image::new(hdr.width, hdr.height, hdr.channels, data)
}

/// Encodes 1-channel images as P5 and 3-channel images as P6, rounding to 8 bits.
pub fn encode_pnm(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(invalid(format!("PGM/PPM holds 1 or 3 channels, got {c}"))),
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    let plane = img.width() * img.height();
    out.reserve(plane * img.channels());
    for p in 0..plane {
        for c in 0..img.channels() {
            out.push(quantize(img.data()[c * plane + p]));
        }
    }
    Ok(out)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&read_file(path.as_ref())?)
}

pub fn write_ppm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_file(path.as_ref(), &encode_pnm(img)?)
}
