//! Oriented-bar images for exercising the training loop.
//!
//! Each image is a periodic grating `I(x, y) = offset + contrast·[(a·x + b·y) mod period < bar_width] + noise`
//! with `(a, b)` drawn from eight stripe directions. With the default period of
//! 8, every 8×8 patch of an image has the same bar layout, so visible patches
//! carry the information needed to predict the masked ones.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{Image, VideoClip};

/// Stripe phase directions `(a, b)`; bars run perpendicular to them.
pub const DIRECTIONS: [(i64, i64); 8] = [
    (1, 0),
    (0, 1),
    (1, 1),
    (1, -1),
    (1, 2),
    (2, 1),
    (1, -2),
    (2, -1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarsConfig {
    pub size: usize,
    pub period: i64,
    pub bar_width: i64,
    pub contrast: f64,
    /// Background brightness is drawn uniformly from this range.
    pub offset_range: (f64, f64),
    /// Per-pixel noise is uniform in `[-noise, noise]`.
    pub noise: f64,
}

impl Default for BarsConfig {
    fn default() -> Self {
        Self {
            size: 32,
            period: 8,
            bar_width: 3,
            contrast: 0.5,
            offset_range: (0.1, 0.4),
            noise: 0.05,
        }
    }
}

/// Single-channel bar image for a given direction index and brightness.
pub fn bar_image(
    cfg: &BarsConfig,
    direction: usize,
    offset: f64,
    rng: &mut impl rand::Rng,
) -> Image {
    let (a, b) = DIRECTIONS[direction % DIRECTIONS.len()];
    Image::from_fn(cfg.size, cfg.size, 1, |_, x, y| {
        let phase = (a * x as i64 + b * y as i64).rem_euclid(cfg.period);
        let bar = if phase < cfg.bar_width {
            cfg.contrast
        } else {
            0.0
        };
        let noise = if cfg.noise > 0.0 {
            rng.random_range(-cfg.noise..=cfg.noise)
        } else {
            0.0
        };
        offset + bar + noise
    })
    .expect("bar image size is positive")
}

/// `count` single-frame clips, each paired with its own mask seed.
pub fn oriented_bars(count: usize, seed: u64, cfg: &BarsConfig) -> Vec<(VideoClip, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let direction = rng.random_range(0..DIRECTIONS.len());
            let offset = rng.random_range(cfg.offset_range.0..=cfg.offset_range.1);
            let img = bar_image(cfg, direction, offset, &mut rng);
            let mask_seed = rng.random();
            (VideoClip::from_image(img), mask_seed)
        })
        .collect()
}
