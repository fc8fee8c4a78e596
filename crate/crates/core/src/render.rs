//! Grayscale visualizations: HOG glyphs and masked inputs.
//!
//! A glyph is drawn per cell and bin as a line through the cell center at the
//! bin's center orientation (image y axis pointing down), with length and
//! brightness proportional to the bin weight relative to the map maximum.
//! Channels are averaged before drawing. Negative weights render as zero.

use crate::error::{invalid, Result};
use crate::hog::{HogConfig, HogFeatureMap};
use crate::imaging::{to_grayscale, Image};
use crate::masking::MaskMap;

pub fn render_hog_glyphs(map: &HogFeatureMap, cfg: &HogConfig, glyph: usize) -> Result<Image> {
    if glyph < 2 {
        return Err(invalid(format!(
            "glyph size must be at least 2 pixels, got {glyph}"
        )));
    }
    if map.num_bins() != cfg.num_bins {
        return Err(invalid(format!(
            "map has {} bins, config has {}",
            map.num_bins(),
            cfg.num_bins
        )));
    }
    let (cy_n, cx_n, bins) = (map.cells_y(), map.cells_x(), map.num_bins());
    let (w, h) = (cx_n * glyph, cy_n * glyph);
    let mut weights = vec![0.0; cy_n * cx_n * bins];
    for c in 0..map.channels() {
        for cy in 0..cy_n {
            for cx in 0..cx_n {
                for (b, v) in map.histogram(c, cy, cx).iter().enumerate() {
                    weights[(cy * cx_n + cx) * bins + b] += v.max(0.0) / map.channels() as f64;
                }
            }
        }
    }
    let peak = weights.iter().copied().fold(0.0, f64::max);
    let mut out: Vec<f64> = vec![0.0; w * h];
    if peak > 0.0 {
        let half = (glyph as f64 - 1.0) / 2.0;
        for cy in 0..cy_n {
            for cx in 0..cx_n {
                let (ox, oy) = ((cx * glyph) as f64 + half, (cy * glyph) as f64 + half);
                for b in 0..bins {
                    let rel = weights[(cy * cx_n + cx) * bins + b] / peak;
                    if rel <= 0.0 {
                        continue;
                    }
                    let angle = cfg.bin_center(b).to_radians();
                    let (dx, dy) = (angle.cos(), angle.sin());
                    let reach = rel * half;
                    let steps = (4.0 * glyph as f64) as i64;
                    for s in -steps..=steps {
                        let t = reach * s as f64 / steps as f64;
                        let x = (ox + t * dx).round();
                        let y = (oy + t * dy).round();
                        let (x, y) = (x as usize, y as usize);
                        // clamp into the glyph's own cell
                        if x / glyph == cx && y / glyph == cy {
                            let px = &mut out[y * w + x];
                            *px = px.max(rel);
                        }
                    }
                }
            }
        }
    }
    Image::new(w, h, 1, out)
}

/// Grayscale copy of one frame with masked patches painted mid-gray.
pub fn render_masked_input(frame: &Image, mask: &MaskMap, t: usize, patch: usize) -> Result<Image> {
    let gray = match frame.channels() {
        1 => frame.clone(),
        3 => to_grayscale(frame)?,
        c => return Err(invalid(format!("cannot render a {c}-channel frame"))),
    };
    if t >= mask.t() || mask.h() * patch != frame.height() || mask.w() * patch != frame.width() {
        return Err(invalid(format!(
            "mask {:?} with patch {patch} does not cover a {}x{} frame",
            mask.dims(),
            frame.width(),
            frame.height()
        )));
    }
    Image::from_fn(frame.width(), frame.height(), 1, |_, x, y| {
        if mask.get(t, y / patch, x / patch) {
            0.5
        } else {
            gray.get(0, x, y)
        }
    })
}

/// Rebuilds a feature map from per-patch vectors laid out as
/// [`split_into_patch_targets`](crate::hog::split_into_patch_targets) produces
/// them. Patches without a vector stay zero.
pub fn map_from_patch_vectors(
    rows: usize,
    cols: usize,
    patch: usize,
    cfg: &HogConfig,
    vectors: &[(usize, Vec<f64>)],
) -> Result<HogFeatureMap> {
    let dim = crate::hog::hog_target_dim(cfg, patch)?;
    let k = patch / cfg.cell_size;
    let (channels, bins) = (cfg.channels(), cfg.num_bins);
    let (cells_y, cells_x) = (rows * k, cols * k);
    let mut data = vec![0.0; channels * cells_y * cells_x * bins];
    for (idx, v) in vectors {
        if v.len() != dim || *idx >= rows * cols {
            return Err(invalid(format!(
                "patch vector {idx} has length {}, expected {dim}",
                v.len()
            )));
        }
        let (py, px) = (idx / cols, idx % cols);
        let mut src = v.chunks(bins);
        for c in 0..channels {
            for cy in py * k..(py + 1) * k {
                for cx in px * k..(px + 1) * k {
                    let start = ((c * cells_y + cy) * cells_x + cx) * bins;
                    data[start..start + bins].copy_from_slice(src.next().expect("length checked"));
                }
            }
        }
    }
    HogFeatureMap::from_parts(cells_y, cells_x, channels, bins, data)
}

/// Nearest-neighbor integer upscaling.
pub fn upscale(img: &Image, factor: usize) -> Result<Image> {
    if factor == 0 {
        return Err(invalid("upscale factor must be positive"));
    }
    Image::from_fn(
        img.width() * factor,
        img.height() * factor,
        img.channels(),
        |c, x, y| img.get(c, x / factor, y / factor),
    )
}

/// Places single-channel images side by side, top-aligned, on black.
pub fn hstack(panels: &[Image]) -> Result<Image> {
    if panels.is_empty() || panels.iter().any(|p| p.channels() != 1) {
        return Err(invalid("hstack needs one or more single-channel panels"));
    }
    let width: usize = panels.iter().map(Image::width).sum();
    let height = panels.iter().map(Image::height).max().unwrap_or(1);
    let mut out = vec![0.0; width * height];
    let mut x0 = 0;
    for p in panels {
        for y in 0..p.height() {
            for x in 0..p.width() {
                out[y * width + x0 + x] = p.get(0, x, y);
            }
        }
        x0 += p.width();
    }
    Image::new(width, height, 1, out)
}
