//! Channel-planar rasters, color transforms and dataset statistics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard deviations at or below this are treated as zero.
pub const MIN_STD: f64 = 1e-12;

/// A channel-planar raster of `f64` intensities.
///
/// Plane `c` occupies `data[c * width * height..(c + 1) * width * height]`,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels == 0 {
            return Err(invalid("image must have at least one channel"));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(invalid(format!(
                "image data has {} values, expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Builds an image by evaluating `f(channel, x, y)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Applies an affine map `a * v + b` to every sample.
    pub fn affine(&self, a: f64, b: f64) -> Image {
        Image {
            data: self.data.iter().map(|v| a * v + b).collect(),
            ..self.clone()
        }
    }

    /// Copies out the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(invalid(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        Image::from_fn(w, h, self.channels, |c, x, y| self.get(c, x0 + x, y0 + y))
    }
}

/// An ordered run of frames sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Vec<Image>,
}

impl VideoClip {
    pub fn new(frames: Vec<Image>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| invalid("clip must contain at least one frame"))?;
        let dims = (first.width, first.height, first.channels);
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| (f.width, f.height, f.channels) != dims)
        {
            return Err(invalid(format!(
                "frame {i} is {}x{}x{}, expected {}x{}x{}",
                f.width, f.height, f.channels, dims.0, dims.1, dims.2
            )));
        }
        Ok(Self { frames })
    }

    /// A one-frame clip; images are treated as single-frame videos.
    pub fn from_image(img: Image) -> Self {
        Self { frames: vec![img] }
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn channels(&self) -> usize {
        self.frames[0].channels
    }
}

/// Per-channel mean and standard deviation used to normalize pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl ChannelStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != std.len() {
            return Err(Error::InvalidStats(format!(
                "mean has {} channels, std has {}",
                mean.len(),
                std.len()
            )));
        }
        if let Some((c, s)) = std
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > MIN_STD))
        {
            return Err(Error::InvalidStats(format!(
                "channel {c} has non-positive std {s}"
            )));
        }
        Ok(Self { mean, std })
    }

    /// Zero mean, unit std: normalization becomes the identity.
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}

fn require_rgb(img: &Image, op: &str) -> Result<()> {
    if img.channels != 3 {
        return Err(invalid(format!(
            "{op} needs a 3-channel image, got {} channels",
            img.channels
        )));
    }
    Ok(())
}

/// BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &Image) -> Result<Image> {
    require_rgb(img, "grayscale conversion")?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
        .collect();
    Image::new(img.width, img.height, 1, data)
}

/// Orthonormal opponent color basis:
///
/// ```text
/// O1 = (R - G) / sqrt(2)
/// O2 = (R + G - 2B) / sqrt(6)
/// O3 = (R + G + B) / sqrt(3)
/// ```
pub fn to_opponent(img: &Image) -> Result<Image> {
    require_rgb(img, "opponent conversion")?;
    let inv_sqrt6 = 1.0 / 6f64.sqrt();
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let n = img.width * img.height;
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        data[i] = (r[i] - g[i]) * INV_SQRT2;
        data[n + i] = (r[i] + g[i] - 2.0 * b[i]) * inv_sqrt6;
        data[2 * n + i] = (r[i] + g[i] + b[i]) * inv_sqrt3;
    }
    Image::new(img.width, img.height, 3, data)
}

/// `(x - mean[c]) / std[c]` per channel.
pub fn normalize_channels(img: &Image, stats: &ChannelStats) -> Result<Image> {
    if stats.channels() != img.channels {
        return Err(invalid(format!(
            "stats have {} channels, image has {}",
            stats.channels(),
            img.channels
        )));
    }
    if let Some(s) = stats.std.iter().find(|s| s.is_nan() || **s <= 0.0) {
        return Err(Error::InvalidStats(format!("non-positive std {s}")));
    }
    let n = img.width * img.height;
    let data = img
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = i / n;
            (v - stats.mean[c]) / stats.std[c]
        })
        .collect();
    Image::new(img.width, img.height, img.channels, data)
}

/// Per-channel mean and population standard deviation over every pixel of
/// every image.
pub fn compute_dataset_stats<'a, I>(imgs: I) -> Result<ChannelStats>
where
    I: IntoIterator<Item = &'a Image>,
    I::IntoIter: Clone,
{
    let iter = imgs.into_iter();
    let channels = iter
        .clone()
        .next()
        .ok_or_else(|| invalid("cannot compute statistics of an empty dataset"))?
        .channels;
    let mut sum = vec![0.0; channels];
    let mut count = 0usize;
    for img in iter.clone() {
        if img.channels != channels {
            return Err(invalid(format!(
                "dataset mixes {channels}- and {}-channel images",
                img.channels
            )));
        }
        for (c, s) in sum.iter_mut().enumerate() {
            *s += img.plane(c).iter().sum::<f64>();
        }
        count += img.width * img.height;
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; channels];
    for img in iter {
        for (c, s) in sq.iter_mut().enumerate() {
            *s += img
                .plane(c)
                .iter()
                .map(|v| (v - mean[c]) * (v - mean[c]))
                .sum::<f64>();
        }
    }
    let std: Vec<f64> = sq.iter().map(|s| (s / count as f64).sqrt()).collect();
    ChannelStats::new(mean, std)
}
