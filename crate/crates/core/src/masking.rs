//! Random token masks: block-wise 2-D masks for images and frame, tube and
//! cube strategies for video token grids.
//!
//! Every strategy grows a union of axis-aligned boxes. One sampling step:
//!
//! * draw a block area uniformly from `[min_block_tokens, max(min_block_tokens, remaining)]`
//!   (capped at the spatial grid size), where `remaining` is the number of
//!   tokens still needed to reach the target,
//! * draw a log-uniform aspect ratio from `aspect_range` and round
//!   `sqrt(area·aspect)` × `sqrt(area/aspect)` to a block size,
//! * place the block uniformly (cubes also draw a start frame and a temporal
//!   extent uniform in `[1, t - start]`),
//! * accept it when it masks at least one new token and no more than
//!   `max(min_block_tokens, remaining)` new tokens.
//!
//! Sampling stops once the masked count reaches `ceil(target_ratio · tokens)`.
//! The last block may overshoot; it is never trimmed. `max_attempts`
//! consecutive rejected proposals end generation with
//! [`Error::PartialMask`].

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;

/// Boolean token grid `[t][h][w]`; `true` marks a masked token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskMap {
    t: usize,
    h: usize,
    w: usize,
    bits: Vec<bool>,
}

impl MaskMap {
    pub fn new(t: usize, h: usize, w: usize) -> Result<Self> {
        Self::from_bits(t, h, w, vec![false; t * h * w])
    }

    pub fn from_bits(t: usize, h: usize, w: usize, bits: Vec<bool>) -> Result<Self> {
        if t == 0 || h == 0 || w == 0 {
            return Err(invalid(format!(
                "mask dims must be positive, got {t}x{h}x{w}"
            )));
        }
        if bits.len() != t * h * w {
            return Err(invalid(format!(
                "mask has {} bits, expected {}",
                bits.len(),
                t * h * w
            )));
        }
        Ok(Self { t, h, w, bits })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.t, self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize) -> usize {
        (t * self.h + y) * self.w + x
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> bool {
        self.bits[self.index(t, y, x)]
    }

    pub fn set(&mut self, t: usize, y: usize, x: usize, value: bool) {
        let i = self.index(t, y, x);
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn ratio(&self) -> f64 {
        self.count() as f64 / self.len() as f64
    }

    pub fn slice(&self, t: usize) -> &[bool] {
        let n = self.h * self.w;
        &self.bits[t * n..(t + 1) * n]
    }

    pub fn frame_ratio(&self, t: usize) -> f64 {
        self.slice(t).iter().filter(|b| **b).count() as f64 / (self.h * self.w) as f64
    }

    /// Flat indices of masked tokens in ascending order.
    pub fn masked_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }

    /// Whether every spatial position holds the same bit in all frames.
    pub fn is_temporally_constant(&self) -> bool {
        let first = self.slice(0);
        (1..self.t).all(|t| self.slice(t) == first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Block2D,
    /// Independent block-wise mask per frame.
    Frame,
    /// One block-wise mask repeated over time.
    Tube,
    /// Union of random space-time boxes.
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    pub target_ratio: f64,
    pub strategy: Strategy,
    pub min_block_tokens: usize,
    pub aspect_range: (f64, f64),
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            target_ratio: 0.4,
            strategy: Strategy::Block2D,
            min_block_tokens: 4,
            aspect_range: (0.3, 1.0 / 0.3),
            max_attempts: 100,
            seed: 0,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_ratio > 0.0 && self.target_ratio < 1.0) {
            return Err(invalid(format!(
                "target ratio must lie in (0, 1), got {}",
                self.target_ratio
            )));
        }
        let (lo, hi) = self.aspect_range;
        if !(lo > 0.0 && lo <= hi && (lo * hi - 1.0).abs() <= 1e-9) {
            return Err(invalid(format!(
                "aspect range ({lo}, {hi}) must be positive, ordered and reciprocal"
            )));
        }
        if self.min_block_tokens == 0 {
            return Err(invalid("min_block_tokens must be at least 1"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("max_attempts must be at least 1"));
        }
        Ok(())
    }

    /// Number of masked tokens required out of `total`.
    pub fn target_count(&self, total: usize) -> usize {
        ((self.target_ratio * total as f64 - 1e-9).ceil() as usize).clamp(1, total)
    }
}

/// The seeded generator behind every mask sampler (ChaCha8 keyed by a `u64`).
#[derive(Debug, Clone)]
pub struct MaskRng(ChaCha8Rng);

impl MaskRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.0.random_range(lo..hi)
        } else {
            lo
        }
    }

    fn index(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        self.0.random_range(lo..=hi_inclusive)
    }
}

/// One accepted box, as emitted by [`cube_mask_traced`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cube {
    pub t0: usize,
    pub frames: usize,
    pub y0: usize,
    pub height: usize,
    pub x0: usize,
    pub width: usize,
}

impl Cube {
    pub fn contains(&self, t: usize, y: usize, x: usize) -> bool {
        (self.t0..self.t0 + self.frames).contains(&t)
            && (self.y0..self.y0 + self.height).contains(&y)
            && (self.x0..self.x0 + self.width).contains(&x)
    }

    pub fn volume(&self) -> usize {
        self.frames * self.height * self.width
    }
}

fn sample_boxes(
    (t, h, w): (usize, usize, usize),
    cfg: &MaskConfig,
    rng: &mut MaskRng,
    temporal: bool,
    mut trace: Option<&mut Vec<Cube>>,
) -> Result<MaskMap> {
    let mut mask = MaskMap::new(t, h, w)?;
    let total = t * h * w;
    let target = cfg.target_count(total);
    let (log_lo, log_hi) = (cfg.aspect_range.0.ln(), cfg.aspect_range.1.ln());
    let min_area = cfg.min_block_tokens;
    let mut count = 0usize;
    let mut failures = 0usize;

    while count < target {
        let limit = min_area.max(target - count);
        let area_hi = limit.min(h * w).max(min_area) as f64;
        let area = rng.uniform(min_area as f64, area_hi);
        let aspect = rng.uniform(log_lo, log_hi).exp();
        let bh = (area * aspect).sqrt().round() as usize;
        let bw = (area / aspect).sqrt().round() as usize;

        let mut accepted = false;
        if bh >= 1 && bw >= 1 && bh <= h && bw <= w {
            let y0 = rng.index(0, h - bh);
            let x0 = rng.index(0, w - bw);
            let (t0, frames) = if temporal {
                let t0 = rng.index(0, t - 1);
                (t0, rng.index(1, t - t0))
            } else {
                (0, 1)
            };
            let cube = Cube {
                t0,
                frames,
                y0,
                height: bh,
                x0,
                width: bw,
            };
            let mut fresh = 0;
            for tt in t0..t0 + frames {
                for y in y0..y0 + bh {
                    fresh += mask.slice(tt)[y * w + x0..y * w + x0 + bw]
                        .iter()
                        .filter(|b| !**b)
                        .count();
                }
            }
            if fresh > 0 && fresh <= limit {
                for tt in t0..t0 + frames {
                    for y in y0..y0 + bh {
                        for x in x0..x0 + bw {
                            mask.set(tt, y, x, true);
                        }
                    }
                }
                count += fresh;
                accepted = true;
                if let Some(trace) = trace.as_deref_mut() {
                    trace.push(cube);
                }
            }
        }

        if accepted {
            failures = 0;
        } else {
            failures += 1;
            if failures >= cfg.max_attempts {
                return Err(Error::PartialMask {
                    achieved: count as f64 / total as f64,
                    target: cfg.target_ratio,
                });
            }
        }
    }
    Ok(mask)
}

/// Block-wise 2-D mask over an `h`×`w` token grid.
pub fn block_mask_2d(h: usize, w: usize, cfg: &MaskConfig, rng: &mut MaskRng) -> Result<MaskMap> {
    cfg.validate()?;
    if h * w < cfg.min_block_tokens {
        return Err(invalid(format!(
            "{h}x{w} grid is smaller than the minimum block of {} tokens",
            cfg.min_block_tokens
        )));
    }
    sample_boxes((1, h, w), cfg, rng, false, None)
}

/// An independent block-wise mask for every frame, each at the target ratio.
pub fn frame_mask(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    rng: &mut MaskRng,
) -> Result<MaskMap> {
    let mut bits = Vec::with_capacity(t * h * w);
    for _ in 0..t {
        bits.extend(block_mask_2d(h, w, cfg, rng)?.bits);
    }
    MaskMap::from_bits(t, h, w, bits)
}

/// One block-wise mask repeated across all `t` frames.
pub fn tube_mask(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    rng: &mut MaskRng,
) -> Result<MaskMap> {
    let plane = block_mask_2d(h, w, cfg, rng)?;
    MaskMap::from_bits(t, h, w, plane.bits.repeat(t))
}

/// Union of random space-time boxes until the target ratio is reached.
pub fn cube_mask(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    rng: &mut MaskRng,
) -> Result<MaskMap> {
    cube_mask_inner(t, h, w, cfg, rng, None)
}

/// [`cube_mask`] that also reports every accepted box in sampling order.
pub fn cube_mask_traced(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    rng: &mut MaskRng,
) -> Result<(MaskMap, Vec<Cube>)> {
    let mut cubes = Vec::new();
    let mask = cube_mask_inner(t, h, w, cfg, rng, Some(&mut cubes))?;
    Ok((mask, cubes))
}

fn cube_mask_inner(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    rng: &mut MaskRng,
    trace: Option<&mut Vec<Cube>>,
) -> Result<MaskMap> {
    cfg.validate()?;
    if t * h * w < cfg.min_block_tokens {
        return Err(invalid(format!(
            "{t}x{h}x{w} grid is smaller than the minimum block of {} tokens",
            cfg.min_block_tokens
        )));
    }
    sample_boxes((t, h, w), cfg, rng, true, trace)
}

/// Runs `cfg.strategy` with a generator seeded from `cfg.seed`.
pub fn generate(t: usize, h: usize, w: usize, cfg: &MaskConfig) -> Result<MaskMap> {
    let mut rng = MaskRng::seed_from_u64(cfg.seed);
    generate_with(t, h, w, cfg, &mut rng)
}

pub fn generate_with(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    rng: &mut MaskRng,
) -> Result<MaskMap> {
    match cfg.strategy {
        Strategy::Block2D if t == 1 => block_mask_2d(h, w, cfg, rng),
        Strategy::Block2D => Err(invalid(format!(
            "block-wise 2-D masking needs t = 1, got t = {t}"
        ))),
        Strategy::Frame => frame_mask(t, h, w, cfg, rng),
        Strategy::Tube => tube_mask(t, h, w, cfg, rng),
        Strategy::Cube => cube_mask(t, h, w, cfg, rng),
    }
}

/// Generates one mask per seed, overriding `cfg.seed`. Results keep seed order.
pub fn generate_batch(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    seeds: &[u64],
) -> Vec<Result<MaskMap>> {
    par::map_slice(seeds, |&seed| {
        generate(t, h, w, &MaskConfig { seed, ..*cfg })
    })
}

/// [`generate_batch`] without the thread pool.
pub fn generate_batch_sequential(
    t: usize,
    h: usize,
    w: usize,
    cfg: &MaskConfig,
    seeds: &[u64],
) -> Vec<Result<MaskMap>> {
    seeds
        .iter()
        .map(|&seed| generate(t, h, w, &MaskConfig { seed, ..*cfg }))
        .collect()
}

/// Nearest-neighbor upsampling: every source bit becomes a
/// `(new_h / h)`×`(new_w / w)` block.
pub fn resize_mask_nearest(m: &MaskMap, new_h: usize, new_w: usize) -> Result<MaskMap> {
    if new_h < m.h || new_w < m.w || !new_h.is_multiple_of(m.h) || !new_w.is_multiple_of(m.w) {
        return Err(invalid(format!(
            "{new_h}x{new_w} is not an integer multiple of {}x{}",
            m.h, m.w
        )));
    }
    let (sy, sx) = (new_h / m.h, new_w / m.w);
    let mut bits = Vec::with_capacity(m.t * new_h * new_w);
    for t in 0..m.t {
        for y in 0..new_h {
            for x in 0..new_w {
                bits.push(m.get(t, y / sy, x / sx));
            }
        }
    }
    MaskMap::from_bits(m.t, new_h, new_w, bits)
}
