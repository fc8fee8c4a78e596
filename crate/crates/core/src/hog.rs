//! Dense histograms of oriented gradients.
//!
//! The descriptor is computed over a whole image and then split into patch
//! targets. Pipeline per color channel:
//!
//! 1. centered differences `[-1, 0, 1]` in x and y with replicate padding,
//! 2. magnitude `sqrt(gx² + gy²)` and orientation `atan2(gy, gx)` folded into
//!    `[0°, 180°)` (or `[0°, 360°)` when signed),
//! 3. each pixel splits its magnitude between the two nearest bin centers by
//!    linear interpolation; bins are the half-open intervals
//!    `[k·P/B, (k+1)·P/B)` with centers at their midpoints, and interpolation
//!    wraps around the period `P`,
//! 4. votes are summed over non-overlapping `cell_size`² cells,
//! 5. each cell histogram is normalized as `v / (‖v‖ + ε)`.
//!
//! No spatial interpolation between cells and no overlapping block
//! normalization is performed.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::imaging::{to_grayscale, to_opponent, Image};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    None,
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorMode {
    /// BT.601 luma, or the single channel of a one-channel image.
    Gray,
    /// One histogram per RGB channel.
    Rgb,
    /// One histogram per opponent channel.
    Opponent,
}

impl ColorMode {
    pub fn output_channels(self) -> usize {
        match self {
            ColorMode::Gray => 1,
            ColorMode::Rgb | ColorMode::Opponent => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HogConfig {
    pub num_bins: usize,
    pub cell_size: usize,
    pub norm: Norm,
    pub color_mode: ColorMode,
    /// Orientations over `[0°, 360°)` instead of `[0°, 180°)`.
    pub signed: bool,
    pub epsilon: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self {
            num_bins: 9,
            cell_size: 8,
            norm: Norm::L2,
            color_mode: ColorMode::Rgb,
            signed: false,
            epsilon: 1e-10,
        }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_bins == 0 {
            return Err(invalid("num_bins must be at least 1"));
        }
        if self.cell_size == 0 {
            return Err(invalid("cell_size must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.color_mode.output_channels()
    }

    /// Orientation period in degrees.
    pub fn period(&self) -> f64 {
        if self.signed {
            360.0
        } else {
            180.0
        }
    }

    pub fn bin_width(&self) -> f64 {
        self.period() / self.num_bins as f64
    }

    /// Center of bin `k` in degrees.
    pub fn bin_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.bin_width()
    }
}

/// Which code path evaluates the descriptor. Both produce bit-identical maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, otherwise
    /// falls back to [`Execution::Sequential`].
    #[default]
    Parallel,
}

/// Per-cell orientation histograms laid out `[channel][cell_y][cell_x][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HogFeatureMap {
    cells_y: usize,
    cells_x: usize,
    channels: usize,
    num_bins: usize,
    data: Vec<f64>,
}

impl HogFeatureMap {
    pub fn from_parts(
        cells_y: usize,
        cells_x: usize,
        channels: usize,
        num_bins: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != cells_y * cells_x * channels * num_bins {
            return Err(invalid(format!(
                "feature map data has {} values, expected {}",
                data.len(),
                cells_y * cells_x * channels * num_bins
            )));
        }
        Ok(Self {
            cells_y,
            cells_x,
            channels,
            num_bins,
            data,
        })
    }

    pub fn cells_y(&self) -> usize {
        self.cells_y
    }

    pub fn cells_x(&self) -> usize {
        self.cells_x
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `[channels, cells_y, cells_x, num_bins]`.
    pub fn dims(&self) -> [usize; 4] {
        [self.channels, self.cells_y, self.cells_x, self.num_bins]
    }

    pub fn histogram(&self, c: usize, cy: usize, cx: usize) -> &[f64] {
        let start = ((c * self.cells_y + cy) * self.cells_x + cx) * self.num_bins;
        &self.data[start..start + self.num_bins]
    }
}

/// Horizontal and vertical derivatives of a single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradientField {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.gx[i], self.gy[i])
    }
}

/// Centered differences with replicate padding:
/// `gx = I(x+1, y) - I(x-1, y)`, `gy = I(x, y+1) - I(x, y-1)`.
pub fn compute_gradients(img: &Image) -> Result<GradientField> {
    if img.channels() != 1 {
        return Err(invalid(format!(
            "gradients need a single-channel image, got {} channels",
            img.channels()
        )));
    }
    if img.width() < 2 || img.height() < 2 {
        return Err(invalid(format!(
            "gradients need at least 2x2 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(plane_gradients(img.plane(0), img.width(), img.height()))
}

fn plane_gradients(plane: &[f64], w: usize, h: usize) -> GradientField {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            gx[y * w + x] = plane[y * w + right] - plane[y * w + left];
            gy[y * w + x] = plane[down * w + x] - plane[up * w + x];
        }
    }
    GradientField {
        width: w,
        height: h,
        gx,
        gy,
    }
}

/// Splits a gradient's magnitude between its two nearest orientation bins.
///
/// Returns `(low_bin, low_weight, high_bin, high_weight)` with the weights
/// summing to the magnitude.
#[inline]
pub fn orientation_vote(gx: f64, gy: f64, cfg: &HogConfig) -> (usize, f64, usize, f64) {
    let magnitude = (gx * gx + gy * gy).sqrt();
    let theta = gy.atan2(gx).to_degrees().rem_euclid(cfg.period());
    let pos = theta / cfg.bin_width() - 0.5;
    let floor = pos.floor();
    let frac = pos - floor;
    let bins = cfg.num_bins as i64;
    let lo = (floor as i64).rem_euclid(bins) as usize;
    let hi = (lo + 1) % cfg.num_bins;
    (lo, magnitude * (1.0 - frac), hi, magnitude * frac)
}

/// Resolves the per-channel planes the descriptor is computed on.
pub fn color_planes(img: &Image, mode: ColorMode) -> Result<Image> {
    match (mode, img.channels()) {
        (ColorMode::Gray, 1) => Ok(img.clone()),
        (ColorMode::Gray, 3) => to_grayscale(img),
        (ColorMode::Rgb, 3) => Ok(img.clone()),
        (ColorMode::Opponent, 3) => to_opponent(img),
        (mode, c) => Err(invalid(format!(
            "color mode {mode:?} is incompatible with a {c}-channel image"
        ))),
    }
}

fn normalize_in_place(hist: &mut [f64], norm: Norm, eps: f64) {
    let length = match norm {
        Norm::None => return,
        Norm::L1 => hist.iter().map(|v| v.abs()).sum::<f64>(),
        Norm::L2 => hist.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    let scale = 1.0 / (length + eps);
    hist.iter_mut().for_each(|v| *v *= scale);
}

/// Dense HOG over the whole image.
pub fn hog_dense(img: &Image, cfg: &HogConfig) -> Result<HogFeatureMap> {
    hog_dense_with(img, cfg, Execution::Parallel)
}

/// Dense HOG on the sequential code path.
pub fn hog_dense_sequential(img: &Image, cfg: &HogConfig) -> Result<HogFeatureMap> {
    hog_dense_with(img, cfg, Execution::Sequential)
}

pub fn hog_dense_with(img: &Image, cfg: &HogConfig, exec: Execution) -> Result<HogFeatureMap> {
    cfg.validate()?;
    let (w, h, cell) = (img.width(), img.height(), cfg.cell_size);
    if w % cell != 0 || h % cell != 0 {
        return Err(invalid(format!(
            "image {w}x{h} is not divisible into {cell}x{cell} cells"
        )));
    }
    if w < 2 || h < 2 {
        return Err(invalid(format!(
            "HOG needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let planes = color_planes(img, cfg.color_mode)?;
    let channels = planes.channels();
    let (cells_x, cells_y, bins) = (w / cell, h / cell, cfg.num_bins);

    let gradients: Vec<GradientField> = match exec {
        Execution::Sequential => (0..channels)
            .map(|c| plane_gradients(planes.plane(c), w, h))
            .collect(),
        Execution::Parallel => par::map_range(channels, |c| plane_gradients(planes.plane(c), w, h)),
    };

    // One chunk per (channel, cell row).
    let row_len = cells_x * bins;
    let fill_row = |chunk_idx: usize, row: &mut [f64]| {
        let (c, cy) = (chunk_idx / cells_y, chunk_idx % cells_y);
        let g = &gradients[c];
        for cx in 0..cells_x {
            let hist = &mut row[cx * bins..(cx + 1) * bins];
            for y in cy * cell..(cy + 1) * cell {
                for x in cx * cell..(cx + 1) * cell {
                    let (gx, gy) = g.at(x, y);
                    let (lo, wl, hi, wh) = orientation_vote(gx, gy, cfg);
                    hist[lo] += wl;
                    hist[hi] += wh;
                }
            }
            normalize_in_place(hist, cfg.norm, cfg.epsilon);
        }
    };

    let mut data = vec![0.0; channels * cells_y * row_len];
    match exec {
        Execution::Sequential => data
            .chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| fill_row(i, row)),
        Execution::Parallel => par::for_each_chunk_mut(&mut data, row_len, fill_row),
    }

    HogFeatureMap::from_parts(cells_y, cells_x, channels, bins, data)
}

/// Length of one patch's flattened HOG target.
pub fn hog_target_dim(cfg: &HogConfig, patch_size: usize) -> Result<usize> {
    cfg.validate()?;
    if patch_size == 0 || !patch_size.is_multiple_of(cfg.cell_size) {
        return Err(invalid(format!(
            "patch size {patch_size} is not a multiple of cell size {}",
            cfg.cell_size
        )));
    }
    let per_side = patch_size / cfg.cell_size;
    Ok(per_side * per_side * cfg.num_bins * cfg.channels())
}

/// Row-major grid of equal-length vectors, one per patch position.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl PatchGrid {
    pub fn vector(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.cols + col) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Splits a whole-image feature map into per-patch target vectors.
///
/// Each vector is flattened channel-major, then by cell row, cell column and
/// finally bin.
pub fn split_into_patch_targets(
    map: &HogFeatureMap,
    patch_size: usize,
    cfg: &HogConfig,
) -> Result<PatchGrid> {
    let dim = hog_target_dim(cfg, patch_size)?;
    if map.num_bins != cfg.num_bins || map.channels != cfg.channels() {
        return Err(invalid(format!(
            "feature map has {} channels x {} bins, config expects {} x {}",
            map.channels,
            map.num_bins,
            cfg.channels(),
            cfg.num_bins
        )));
    }
    let k = patch_size / cfg.cell_size;
    if !map.cells_y.is_multiple_of(k) || !map.cells_x.is_multiple_of(k) {
        return Err(invalid(format!(
            "{}x{} cell grid is not divisible into {k}x{k}-cell patches",
            map.cells_y, map.cells_x
        )));
    }
    let (rows, cols) = (map.cells_y / k, map.cells_x / k);
    let mut data = Vec::with_capacity(rows * cols * dim);
    for py in 0..rows {
        for px in 0..cols {
            for c in 0..map.channels {
                for cy in py * k..(py + 1) * k {
                    for cx in px * k..(px + 1) * k {
                        data.extend_from_slice(map.histogram(c, cy, cx));
                    }
                }
            }
        }
    }
    Ok(PatchGrid {
        rows,
        cols,
        dim,
        data,
    })
}
