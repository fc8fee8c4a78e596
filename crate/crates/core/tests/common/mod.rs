//! Reference implementations used as test oracles. They favor directness over
//! speed and share no code with the library beyond its data types.

#![allow(dead_code)]

use maskfeat::hog::{ColorMode, HogConfig, Norm};
use maskfeat::imaging::Image;
use maskfeat::masking::MaskMap;
use maskfeat::predictor::LinearPredictor;
use maskfeat::targets::{TargetKind, TargetSet, TokenGrid, TrainingSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize, c: usize) -> Image {
    let data = (0..w * h * c).map(|_| rng.random::<f64>()).collect();
    Image::new(w, h, c, data).unwrap()
}

/// Channel `ch` of the HOG color transform at pixel (x, y), computed inline.
fn color_value(img: &Image, mode: ColorMode, ch: usize, x: usize, y: usize) -> f64 {
    let px = |c| img.get(c, x, y);
    match mode {
        ColorMode::Gray if img.channels() == 1 => px(0),
        ColorMode::Gray => 0.299 * px(0) + 0.587 * px(1) + 0.114 * px(2),
        ColorMode::Rgb => px(ch),
        ColorMode::Opponent => {
            let (r, g, b) = (px(0), px(1), px(2));
            match ch {
                0 => (r - g) / 2f64.sqrt(),
                1 => (r + g - 2.0 * b) / 6f64.sqrt(),
                _ => (r + g + b) / 3f64.sqrt(),
            }
        }
    }
}

/// Centered-difference gradient with clamped (replicated) border samples.
pub fn naive_gradient(img: &Image, mode: ColorMode, ch: usize, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = (img.width(), img.height());
    let v = |xx: usize, yy: usize| color_value(img, mode, ch, xx, yy);
    let gx = v((x + 1).min(w - 1), y) - v(x.saturating_sub(1), y);
    let gy = v(x, (y + 1).min(h - 1)) - v(x, y.saturating_sub(1));
    (gx, gy)
}

fn output_channels(mode: ColorMode) -> usize {
    match mode {
        ColorMode::Gray => 1,
        _ => 3,
    }
}

/// Per-cell HOG straight from the definition: every pixel gives each bin the
/// weight `max(0, 1 - d / bin_width)` of its magnitude, where `d` is the
/// circular distance between the pixel orientation and the bin center.
/// Valid for two or more bins. Layout `[channel][cy][cx][bin]`.
pub fn naive_hog(img: &Image, cfg: &HogConfig) -> Vec<f64> {
    let period = if cfg.signed { 360.0 } else { 180.0 };
    let bins = cfg.num_bins;
    let width = period / bins as f64;
    let (ncy, ncx) = (img.height() / cfg.cell_size, img.width() / cfg.cell_size);
    let mut out = Vec::new();
    for ch in 0..output_channels(cfg.color_mode) {
        for cy in 0..ncy {
            for cx in 0..ncx {
                let mut hist = vec![0.0; bins];
                for y in cy * cfg.cell_size..(cy + 1) * cfg.cell_size {
                    for x in cx * cfg.cell_size..(cx + 1) * cfg.cell_size {
                        let (gx, gy) = naive_gradient(img, cfg.color_mode, ch, x, y);
                        let mag = (gx * gx + gy * gy).sqrt();
                        let theta = gy.atan2(gx).to_degrees().rem_euclid(period);
                        for (k, slot) in hist.iter_mut().enumerate() {
                            let center = (k as f64 + 0.5) * width;
                            let raw = (theta - center).abs();
                            let d = raw.min(period - raw);
                            *slot += mag * (1.0 - d / width).max(0.0);
                        }
                    }
                }
                let norm = match cfg.norm {
                    Norm::None => None,
                    Norm::L1 => Some(hist.iter().map(|v: &f64| v.abs()).sum::<f64>()),
                    Norm::L2 => Some(hist.iter().map(|v| v * v).sum::<f64>().sqrt()),
                };
                if let Some(n) = norm {
                    hist.iter_mut().for_each(|v| *v /= n + cfg.epsilon);
                }
                out.extend(hist);
            }
        }
    }
    out
}

/// Sum of gradient magnitudes over each cell, layout `[channel][cy][cx]`.
pub fn naive_cell_magnitudes(img: &Image, cfg: &HogConfig) -> Vec<f64> {
    let (ncy, ncx) = (img.height() / cfg.cell_size, img.width() / cfg.cell_size);
    let mut out = Vec::new();
    for ch in 0..output_channels(cfg.color_mode) {
        for cy in 0..ncy {
            for cx in 0..ncx {
                let mut s = 0.0;
                for y in cy * cfg.cell_size..(cy + 1) * cfg.cell_size {
                    for x in cx * cfg.cell_size..(cx + 1) * cfg.cell_size {
                        let (gx, gy) = naive_gradient(img, cfg.color_mode, ch, x, y);
                        s += (gx * gx + gy * gy).sqrt();
                    }
                }
                out.push(s);
            }
        }
    }
    out
}

/// Per-patch HOG target vectors cut from a whole-image reference map,
/// in row-major patch order.
pub fn naive_patch_targets(img: &Image, cfg: &HogConfig, patch: usize) -> Vec<Vec<f64>> {
    let map = naive_hog(img, cfg);
    let (ncy, ncx) = (img.height() / cfg.cell_size, img.width() / cfg.cell_size);
    let k = patch / cfg.cell_size;
    let bins = cfg.num_bins;
    let mut out = Vec::new();
    for py in 0..img.height() / patch {
        for px in 0..img.width() / patch {
            let mut v = Vec::new();
            for ch in 0..output_channels(cfg.color_mode) {
                for cy in py * k..(py + 1) * k {
                    for cx in px * k..(px + 1) * k {
                        let start = ((ch * ncy + cy) * ncx + cx) * bins;
                        v.extend_from_slice(&map[start..start + bins]);
                    }
                }
            }
            out.push(v);
        }
    }
    out
}

/// Constant-mean predictor over a set of vectors and its per-entry MSE.
pub fn brute_mean_baseline(vectors: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let dim = vectors[0].len();
    let n = vectors.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|d| vectors.iter().map(|v| v[d]).sum::<f64>() / n)
        .collect();
    let mut sq = 0.0;
    for v in vectors {
        for d in 0..dim {
            sq += (v[d] - mean[d]).powi(2);
        }
    }
    (mean, sq / (n * dim as f64))
}

/// Loss of the linear predictor evaluated from its definition: masked tokens
/// become the embedding, each masked token reads itself and the mean of the
/// other tokens in its 3x3x3 box, and the loss is the mean squared error.
pub fn reference_loss(model: &LinearPredictor, sample: &TrainingSample) -> f64 {
    let g = &sample.tokens;
    let d = g.dim;
    let token = |i: usize| -> &[f64] {
        if sample.mask.bits()[i] {
            &model.mask_embedding
        } else {
            g.token(i)
        }
    };
    let n_in = 2 * d;
    let set = &sample.targets[0];
    let mut sq = 0.0;
    for (i, target) in &set.entries {
        let (t, y, x) = (i / (g.h * g.w), (i / g.w) % g.h, i % g.w);
        let mut ctx = vec![0.0; d];
        let mut count = 0usize;
        for tt in t as i64 - 1..=t as i64 + 1 {
            for yy in y as i64 - 1..=y as i64 + 1 {
                for xx in x as i64 - 1..=x as i64 + 1 {
                    if tt < 0
                        || yy < 0
                        || xx < 0
                        || tt >= g.t as i64
                        || yy >= g.h as i64
                        || xx >= g.w as i64
                    {
                        continue;
                    }
                    let j = ((tt as usize) * g.h + yy as usize) * g.w + xx as usize;
                    if j == *i {
                        continue;
                    }
                    for (c, v) in ctx.iter_mut().zip(token(j)) {
                        *c += v;
                    }
                    count += 1;
                }
            }
        }
        if count > 0 {
            ctx.iter_mut().for_each(|c| *c /= count as f64);
        }
        let phi: Vec<f64> = token(*i).iter().chain(&ctx).copied().collect();
        for (r, want) in target.iter().enumerate() {
            let row = &model.weight[r * n_in..(r + 1) * n_in];
            let pred = row.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() + model.bias[r];
            sq += (pred - want).powi(2);
        }
    }
    sq / (set.entries.len() * set.dim) as f64
}

/// A random grid sample with at least one masked token.
pub fn random_sample(rng: &mut impl Rng, token_dim: usize, target_dim: usize) -> TrainingSample {
    let (t, h, w) = (
        rng.random_range(1..=2),
        rng.random_range(2..=4),
        rng.random_range(2..=4),
    );
    let n = t * h * w;
    let tokens = TokenGrid {
        t,
        h,
        w,
        dim: token_dim,
        data: (0..n * token_dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    };
    let mut bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let forced = rng.random_range(0..n);
    bits[forced] = true;
    let mask = MaskMap::from_bits(t, h, w, bits).unwrap();
    let entries = mask
        .masked_indices()
        .into_iter()
        .map(|i| {
            (
                i,
                (0..target_dim)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            )
        })
        .collect();
    TrainingSample {
        tokens,
        mask,
        targets: vec![TargetSet {
            kind: TargetKind::Hog,
            weight: 1.0,
            dim: target_dim,
            entries,
        }],
    }
}

/// Central finite differences of `f` at every coordinate of `params`.
pub fn central_differences(
    params: &[f64],
    step: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + step;
            let up = f(&p);
            p[k] = orig - step;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, floor)`; the floor keeps entries whose true
/// gradient is zero from dividing rounding noise by zero.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// The toy training setup: 256 oriented-bar images (seed 7), 8-pixel patches,
/// gray HOG targets with 4-pixel cells, block masks at ratio 0.4.
pub struct Toy {
    pub data: Vec<(maskfeat::VideoClip, u64)>,
    pub pspec: maskfeat::PatchSpec,
    pub tspec: maskfeat::TargetSpec,
    pub mcfg: maskfeat::MaskConfig,
    pub tcfg: maskfeat::TrainConfig,
}

pub fn toy() -> Toy {
    use maskfeat::imaging::compute_dataset_stats;
    use maskfeat::synthetic::{oriented_bars, BarsConfig};
    use maskfeat::targets::{TargetDesign, TargetSpec};

    let data = oriented_bars(256, 7, &BarsConfig::default());
    let stats = compute_dataset_stats(data.iter().map(|(c, _)| &c.frames()[0])).unwrap();
    let hog = HogConfig {
        cell_size: 4,
        color_mode: ColorMode::Gray,
        ..HogConfig::default()
    };
    Toy {
        data,
        pspec: maskfeat::PatchSpec::image(8),
        tspec: TargetSpec::hog(hog, stats, TargetDesign::CenterPatch),
        mcfg: maskfeat::MaskConfig {
            target_ratio: 0.4,
            ..maskfeat::MaskConfig::default()
        },
        tcfg: maskfeat::TrainConfig::default(),
    }
}

/// Prints one `PASS`/`FAIL` line for an acceptance criterion, then asserts it.
pub fn report(id: u32, name: &str, ok: bool, detail: String) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}
