//! Linear masked predictor with a learnable `[MASK]` embedding.
//!
//! Masked tokens are replaced by the mask embedding. For each masked token `i`
//! the model reads the feature vector
//!
//! ```text
//! φᵢ = [ x̃ᵢ ; cᵢ ]      cᵢ = mean of x̃ⱼ over the neighbors j of i
//! ```
//!
//! where `x̃` are tokens after mask replacement (so `x̃ᵢ` is the embedding) and
//! the neighbors are all other tokens in the surrounding 3×3×3 box of the
//! token grid. The prediction is `W·φᵢ + b` and the loss is
//! [`l2_masked`](crate::losses::l2_masked) against the first target component.
//!
//! Gradients, with `gᵢ = 2(predᵢ − targetᵢ) / (m·D)` over `m` masked tokens:
//!
//! ```text
//! dW   = Σᵢ gᵢ φᵢᵀ
//! db   = Σᵢ gᵢ
//! demb = Σᵢ W_selfᵀ gᵢ + Σᵢ (|masked neighbors of i| / |neighbors of i|) W_ctxᵀ gᵢ
//! ```

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::imaging::VideoClip;
use crate::losses::l2_masked;
use crate::masking::{self, MaskConfig, MaskMap};
use crate::par;
use crate::targets::{
    apply_mask_tokens, PatchSpec, PreparedClip, TargetSelection, TargetSpec, TokenGrid,
    TrainingSample,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    target_dim: usize,
    token_dim: usize,
    /// `target_dim × 2·token_dim`, row-major; columns `[0, token_dim)` act on
    /// the token itself, the rest on its neighborhood mean.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub mask_embedding: Vec<f64>,
}

impl LinearPredictor {
    pub fn zeros(target_dim: usize, token_dim: usize) -> Self {
        Self {
            target_dim,
            token_dim,
            weight: vec![0.0; target_dim * 2 * token_dim],
            bias: vec![0.0; target_dim],
            mask_embedding: vec![0.0; token_dim],
        }
    }

    /// Every parameter i.i.d. uniform in `[-scale, scale]`.
    pub fn random(target_dim: usize, token_dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if scale > 0.0 {
                        rng.random_range(-scale..=scale)
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        Self {
            target_dim,
            token_dim,
            weight: draw(target_dim * 2 * token_dim),
            bias: draw(target_dim),
            mask_embedding: draw(token_dim),
        }
    }

    pub fn from_parts(
        target_dim: usize,
        token_dim: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
        mask_embedding: Vec<f64>,
    ) -> Result<Self> {
        if weight.len() != target_dim * 2 * token_dim
            || bias.len() != target_dim
            || mask_embedding.len() != token_dim
        {
            return Err(invalid(format!(
                "parameter lengths {}/{}/{} do not fit target_dim {target_dim}, token_dim {token_dim}",
                weight.len(),
                bias.len(),
                mask_embedding.len()
            )));
        }
        if weight
            .iter()
            .chain(&bias)
            .chain(&mask_embedding)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("model parameters must be finite"));
        }
        Ok(Self {
            target_dim,
            token_dim,
            weight,
            bias,
            mask_embedding,
        })
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn token_dim(&self) -> usize {
        self.token_dim
    }

    pub fn input_dim(&self) -> usize {
        2 * self.token_dim
    }

    fn row(&self, r: usize) -> &[f64] {
        let n = self.input_dim();
        &self.weight[r * n..(r + 1) * n]
    }

    fn apply(&self, phi: &[f64]) -> Vec<f64> {
        (0..self.target_dim)
            .map(|r| dot(self.row(r), phi) + self.bias[r])
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neighbors of flat token `i`: other tokens in the surrounding 3×3×3 box.
fn neighbors(grid: &TokenGrid, i: usize) -> Vec<usize> {
    let (t, y, x) = (i / (grid.h * grid.w), (i / grid.w) % grid.h, i % grid.w);
    let span = |c: usize, n: usize| c.saturating_sub(1)..(c + 2).min(n);
    let mut out = Vec::with_capacity(26);
    for tt in span(t, grid.t) {
        for yy in span(y, grid.h) {
            for xx in span(x, grid.w) {
                let j = (tt * grid.h + yy) * grid.w + xx;
                if j != i {
                    out.push(j);
                }
            }
        }
    }
    out
}

/// Feature vector `[x̃ᵢ ; mean of neighbors]` over mask-replaced tokens.
fn features(replaced: &TokenGrid, i: usize) -> Vec<f64> {
    let d = replaced.dim;
    let mut phi = Vec::with_capacity(2 * d);
    phi.extend_from_slice(replaced.token(i));
    let nb = neighbors(replaced, i);
    let mut ctx = vec![0.0; d];
    for &j in &nb {
        ctx.iter_mut()
            .zip(replaced.token(j))
            .for_each(|(c, v)| *c += v);
    }
    if !nb.is_empty() {
        let inv = 1.0 / nb.len() as f64;
        ctx.iter_mut().for_each(|c| *c *= inv);
    }
    phi.extend(ctx);
    phi
}

fn check_sample(model: &LinearPredictor, sample: &TrainingSample) -> Result<()> {
    if sample.tokens.dim != model.token_dim {
        return Err(invalid(format!(
            "tokens have length {}, model expects {}",
            sample.tokens.dim, model.token_dim
        )));
    }
    let set = sample
        .targets
        .first()
        .ok_or_else(|| invalid("sample has no target component"))?;
    if set.dim != model.target_dim {
        return Err(invalid(format!(
            "targets have length {}, model predicts {}",
            set.dim, model.target_dim
        )));
    }
    if set.entries.is_empty() {
        return Err(invalid("sample has no masked tokens"));
    }
    Ok(())
}

/// Predictions for the masked tokens of `tokens`, in ascending token order.
pub fn predict(
    model: &LinearPredictor,
    tokens: &TokenGrid,
    mask: &MaskMap,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let replaced = apply_mask_tokens(tokens, mask, &model.mask_embedding)?;
    Ok(mask
        .masked_indices()
        .into_iter()
        .map(|i| (i, model.apply(&features(&replaced, i))))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Predictions aligned with the sample's first target set.
    pub preds: Vec<Vec<f64>>,
    pub loss: f64,
}

pub fn forward(model: &LinearPredictor, sample: &TrainingSample) -> Result<Forward> {
    check_sample(model, sample)?;
    let replaced = apply_mask_tokens(&sample.tokens, &sample.mask, &model.mask_embedding)?;
    let set = &sample.targets[0];
    let preds: Vec<Vec<f64>> = set
        .entries
        .iter()
        .map(|(i, _)| model.apply(&features(&replaced, *i)))
        .collect();
    let loss = l2_masked(&preds, &set.vectors(), set.entries.len())?;
    Ok(Forward { preds, loss })
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub mask_embedding: Vec<f64>,
    pub loss: f64,
}

impl Gradients {
    fn zeros(model: &LinearPredictor) -> Self {
        Self {
            weight: vec![0.0; model.weight.len()],
            bias: vec![0.0; model.bias.len()],
            mask_embedding: vec![0.0; model.mask_embedding.len()],
            loss: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &Gradients, s: f64) {
        let pairs = self
            .weight
            .iter_mut()
            .zip(&other.weight)
            .chain(self.bias.iter_mut().zip(&other.bias))
            .chain(self.mask_embedding.iter_mut().zip(&other.mask_embedding));
        for (a, b) in pairs {
            *a += s * b;
        }
        self.loss += s * other.loss;
    }
}

/// Analytic gradients of the forward loss.
pub fn backward(model: &LinearPredictor, sample: &TrainingSample) -> Result<Gradients> {
    check_sample(model, sample)?;
    let replaced = apply_mask_tokens(&sample.tokens, &sample.mask, &model.mask_embedding)?;
    let set = &sample.targets[0];
    let (m, dim, d) = (set.entries.len(), model.target_dim, model.token_dim);
    let n_in = model.input_dim();
    let scale = 2.0 / (m * dim) as f64;
    let mut grads = Gradients::zeros(model);
    let mut sq = 0.0;

    for (i, target) in &set.entries {
        let phi = features(&replaced, *i);
        let pred = model.apply(&phi);
        let g: Vec<f64> = pred
            .iter()
            .zip(target)
            .map(|(p, t)| {
                sq += (p - t) * (p - t);
                scale * (p - t)
            })
            .collect();

        let nb = neighbors(&replaced, *i);
        let masked_nb = nb.iter().filter(|&&j| sample.mask.bits()[j]).count();
        let ctx_share = if nb.is_empty() {
            0.0
        } else {
            masked_nb as f64 / nb.len() as f64
        };
        let self_share = if sample.mask.bits()[*i] { 1.0 } else { 0.0 };

        for (r, gr) in g.iter().enumerate() {
            grads.bias[r] += gr;
            let wrow = &mut grads.weight[r * n_in..(r + 1) * n_in];
            wrow.iter_mut().zip(&phi).for_each(|(w, p)| *w += gr * p);
            let mrow = model.row(r);
            for k in 0..d {
                grads.mask_embedding[k] += gr * (self_share * mrow[k] + ctx_share * mrow[d + k]);
            }
        }
    }
    grads.loss = sq / (m * dim) as f64;
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 8,
            seed: 0,
            init_scale: 0.02,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("epochs and batch size must be at least 1"));
        }
        Ok(())
    }
}

/// Knobs that only matter for ablations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Keep the mask embedding at its initial value.
    pub freeze_mask_embedding: bool,
    /// Draw a new mask for every sample in every epoch (seeded by
    /// [`epoch_mask_seed`]) instead of reusing the sample's own mask.
    pub remask_each_epoch: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearPredictor,
    /// Mean training loss of each epoch, measured before each batch update.
    pub loss_curve: Vec<f64>,
}

/// SplitMix64 finalizer; derives per-epoch mask seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the mask drawn for a sample in a given epoch.
pub fn epoch_mask_seed(sample_seed: u64, epoch: usize) -> u64 {
    mix(sample_seed ^ mix(epoch as u64))
}

fn prepare_dataset(
    dataset: &[(VideoClip, u64)],
    pspec: &PatchSpec,
    tspec: &TargetSpec,
) -> Result<Vec<PreparedClip>> {
    if dataset.is_empty() {
        return Err(invalid("dataset is empty"));
    }
    par::map_slice(dataset, |(clip, _)| PreparedClip::new(clip, pspec, tspec))
        .into_iter()
        .collect()
}

pub fn train(
    dataset: &[(VideoClip, u64)],
    pspec: &PatchSpec,
    tspec: &TargetSpec,
    mcfg: &MaskConfig,
    tcfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_options(dataset, pspec, tspec, mcfg, tcfg, TrainOptions::default())
}

pub fn train_with_options(
    dataset: &[(VideoClip, u64)],
    pspec: &PatchSpec,
    tspec: &TargetSpec,
    mcfg: &MaskConfig,
    tcfg: &TrainConfig,
    opts: TrainOptions,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    mcfg.validate()?;
    if !matches!(tspec.selection, TargetSelection::Single(_)) {
        return Err(invalid("the linear predictor trains a single target head"));
    }
    let prepared = prepare_dataset(dataset, pspec, tspec)?;
    let first = &prepared[0];
    let (t, h, w) = first.tokens.dims();
    let mut model = LinearPredictor::random(
        first.targets[0].dim,
        first.tokens.dim,
        tcfg.init_scale,
        tcfg.seed,
    );

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix(tcfg.seed));
    let mut loss_curve = Vec::with_capacity(tcfg.epochs);

    for epoch in 0..tcfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(tcfg.batch_size) {
            let per_sample: Vec<Result<Gradients>> = par::map_slice(batch, |&k| {
                let seed = if opts.remask_each_epoch {
                    epoch_mask_seed(dataset[k].1, epoch)
                } else {
                    dataset[k].1
                };
                let cfg = MaskConfig { seed, ..*mcfg };
                let mask = masking::generate(t, h, w, &cfg)?;
                backward(&model, &prepared[k].sample(&mask)?)
            });
            let mut total = Gradients::zeros(&model);
            for g in per_sample {
                total.add_scaled(&g?, 1.0 / batch.len() as f64);
            }
            epoch_loss += total.loss * batch.len() as f64;

            let lr = tcfg.learning_rate;
            model
                .weight
                .iter_mut()
                .zip(&total.weight)
                .for_each(|(p, g)| *p -= lr * g);
            model
                .bias
                .iter_mut()
                .zip(&total.bias)
                .for_each(|(p, g)| *p -= lr * g);
            if !opts.freeze_mask_embedding {
                model
                    .mask_embedding
                    .iter_mut()
                    .zip(&total.mask_embedding)
                    .for_each(|(p, g)| *p -= lr * g);
            }
        }
        loss_curve.push(epoch_loss / prepared.len() as f64);
    }
    Ok(TrainOutcome { model, loss_curve })
}

/// Constant dataset-mean predictor and its MSE over every token.
pub fn mean_baseline(
    dataset: &[(VideoClip, u64)],
    pspec: &PatchSpec,
    tspec: &TargetSpec,
) -> Result<(Vec<f64>, f64)> {
    let prepared = prepare_dataset(dataset, pspec, tspec)?;
    Ok(mean_baseline_prepared(&prepared))
}

pub(crate) fn mean_baseline_prepared(prepared: &[PreparedClip]) -> (Vec<f64>, f64) {
    let dim = prepared[0].targets[0].dim;
    let mut mean = vec![0.0; dim];
    let mut count = 0usize;
    for p in prepared {
        for v in p.targets[0].data.chunks(dim) {
            mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
            count += 1;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let sq: f64 = prepared
        .iter()
        .flat_map(|p| p.targets[0].data.chunks(dim))
        .map(|v| {
            v.iter()
                .zip(&mean)
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>()
        })
        .sum();
    (mean, sq / (count * dim) as f64)
}
