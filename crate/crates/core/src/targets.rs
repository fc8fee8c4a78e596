//! Tokenization into space-time cubes and per-token prediction targets.
//!
//! Token grid index `(t, y, x)` maps to flat index `(t·h + y)·w + x`, the same
//! order as [`MaskMap`] bits. A token vector holds the channel-normalized
//! pixels of its cube flattened as (frame, channel, row, column).
//!
//! The temporal center of a cube with `cube_frames = n` is frame `⌊n / 2⌋`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hog::{hog_dense, hog_target_dim, split_into_patch_targets, HogConfig, PatchGrid};
use crate::imaging::{normalize_channels, ChannelStats, VideoClip};
use crate::masking::MaskMap;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub patch_size: usize,
    pub cube_frames: usize,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self {
            patch_size: 16,
            cube_frames: 2,
        }
    }
}

impl PatchSpec {
    /// Spatial patches for single images.
    pub fn image(patch_size: usize) -> Self {
        Self {
            patch_size,
            cube_frames: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.cube_frames == 0 {
            return Err(invalid(format!(
                "patch size and cube frames must be positive, got {} and {}",
                self.patch_size, self.cube_frames
            )));
        }
        Ok(())
    }

    /// Token grid dims `(t', h', w')` for a clip.
    pub fn grid_dims(&self, clip: &VideoClip) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let p = self.patch_size;
        if !clip.width().is_multiple_of(p) || !clip.height().is_multiple_of(p) {
            return Err(invalid(format!(
                "{}x{} frames are not divisible into {p}x{p} patches",
                clip.width(),
                clip.height()
            )));
        }
        if !clip.frame_count().is_multiple_of(self.cube_frames) {
            return Err(invalid(format!(
                "{} frames are not divisible into cubes of {}",
                clip.frame_count(),
                self.cube_frames
            )));
        }
        Ok((
            clip.frame_count() / self.cube_frames,
            clip.height() / p,
            clip.width() / p,
        ))
    }

    pub fn center_offset(&self) -> usize {
        self.cube_frames / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    Pixel,
    Hog,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Pixel => "pixel",
            TargetKind::Hog => "hog",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetSelection {
    Single(TargetKind),
    /// Separate targets per component; weights are applied at loss time.
    MultiTask(Vec<(TargetKind, f64)>),
}

impl TargetSelection {
    /// Pixel and HOG with equal weights.
    pub fn pixel_and_hog() -> Self {
        TargetSelection::MultiTask(vec![(TargetKind::Pixel, 1.0), (TargetKind::Hog, 1.0)])
    }

    pub fn components(&self) -> Vec<(TargetKind, f64)> {
        match self {
            TargetSelection::Single(k) => vec![(*k, 1.0)],
            TargetSelection::MultiTask(parts) => parts.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetDesign {
    /// Feature of the temporally centered 2-D patch of each cube.
    CenterPatch,
    /// Features of every frame of the cube, concatenated in time order.
    FullCube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub selection: TargetSelection,
    pub hog: HogConfig,
    /// Normalization for pixel targets.
    pub stats: ChannelStats,
    pub design: TargetDesign,
}

impl TargetSpec {
    pub fn hog(hog: HogConfig, stats: ChannelStats, design: TargetDesign) -> Self {
        Self {
            selection: TargetSelection::Single(TargetKind::Hog),
            hog,
            stats,
            design,
        }
    }

    fn validate(&self) -> Result<()> {
        let parts = self.selection.components();
        if parts.is_empty() {
            return Err(invalid("target selection has no components"));
        }
        if let Some((k, w)) = parts.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid(format!(
                "{} target has invalid weight {w}",
                k.name()
            )));
        }
        Ok(())
    }

    /// Per-token length of one component's target vector.
    pub fn component_dim(
        &self,
        kind: TargetKind,
        pspec: &PatchSpec,
        channels: usize,
    ) -> Result<usize> {
        let frames = match self.design {
            TargetDesign::CenterPatch => 1,
            TargetDesign::FullCube => pspec.cube_frames,
        };
        let per_frame = match kind {
            TargetKind::Pixel => channels * pspec.patch_size * pspec.patch_size,
            TargetKind::Hog => hog_target_dim(&self.hog, pspec.patch_size)?,
        };
        Ok(frames * per_frame)
    }
}

/// Token vectors over a `t`×`h`×`w` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TokenGrid {
    pub fn len(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn token(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn token_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.t, self.h, self.w)
    }
}

/// Splits a clip into cube tokens of normalized pixels.
pub fn tokenize(clip: &VideoClip, spec: &PatchSpec, stats: &ChannelStats) -> Result<TokenGrid> {
    let (gt, gh, gw) = spec.grid_dims(clip)?;
    let frames = clip
        .frames()
        .iter()
        .map(|f| normalize_channels(f, stats))
        .collect::<Result<Vec<_>>>()?;
    let (p, c, n) = (spec.patch_size, clip.channels(), spec.cube_frames);
    let dim = n * c * p * p;
    let mut data = Vec::with_capacity(gt * gh * gw * dim);
    for tt in 0..gt {
        for gy in 0..gh {
            for gx in 0..gw {
                for f in &frames[tt * n..(tt + 1) * n] {
                    for ch in 0..c {
                        let plane = f.plane(ch);
                        for y in gy * p..(gy + 1) * p {
                            data.extend_from_slice(
                                &plane[y * f.width() + gx * p..y * f.width() + (gx + 1) * p],
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(TokenGrid {
        t: gt,
        h: gh,
        w: gw,
        dim,
        data,
    })
}

/// Target vectors of one component for every token of a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTargets {
    pub kind: TargetKind,
    pub weight: f64,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseTargets {
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Masked-token targets of one component, as `(token index, vector)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    pub kind: TargetKind,
    pub weight: f64,
    pub dim: usize,
    pub entries: Vec<(usize, Vec<f64>)>,
}

impl TargetSet {
    pub fn vectors(&self) -> Vec<&[f64]> {
        self.entries.iter().map(|(_, v)| v.as_slice()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub tokens: TokenGrid,
    pub mask: MaskMap,
    /// One set per target component, in selection order.
    pub targets: Vec<TargetSet>,
}

impl TrainingSample {
    /// Length of the first component's target vectors.
    pub fn target_dim(&self) -> usize {
        self.targets[0].dim
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        self.mask.masked_indices()
    }
}

/// Tokens and dense targets of one clip, ready to be paired with any mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedClip {
    pub tokens: TokenGrid,
    pub targets: Vec<DenseTargets>,
}

impl PreparedClip {
    pub fn new(clip: &VideoClip, pspec: &PatchSpec, tspec: &TargetSpec) -> Result<Self> {
        tspec.validate()?;
        let tokens = tokenize(clip, pspec, &tspec.stats)?;
        let targets = tspec
            .selection
            .components()
            .into_iter()
            .map(|(kind, weight)| dense_targets(clip, pspec, tspec, kind, weight, &tokens))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tokens, targets })
    }

    /// Pairs the prepared clip with a mask, keeping targets of masked tokens only.
    pub fn sample(&self, mask: &MaskMap) -> Result<TrainingSample> {
        if mask.dims() != self.tokens.dims() {
            return Err(invalid(format!(
                "mask dims {:?} differ from token grid {:?}",
                mask.dims(),
                self.tokens.dims()
            )));
        }
        let masked = mask.masked_indices();
        let targets = self
            .targets
            .iter()
            .map(|d| TargetSet {
                kind: d.kind,
                weight: d.weight,
                dim: d.dim,
                entries: masked.iter().map(|&i| (i, d.vector(i).to_vec())).collect(),
            })
            .collect();
        Ok(TrainingSample {
            tokens: self.tokens.clone(),
            mask: mask.clone(),
            targets,
        })
    }
}

fn dense_targets(
    clip: &VideoClip,
    pspec: &PatchSpec,
    tspec: &TargetSpec,
    kind: TargetKind,
    weight: f64,
    tokens: &TokenGrid,
) -> Result<DenseTargets> {
    let dim = tspec.component_dim(kind, pspec, clip.channels())?;
    let n = pspec.cube_frames;
    let (offset, span) = match tspec.design {
        TargetDesign::CenterPatch => (pspec.center_offset(), 1),
        TargetDesign::FullCube => (0, n),
    };
    let mut data = Vec::with_capacity(tokens.len() * dim);
    match kind {
        TargetKind::Pixel => {
            // token vectors are already (frame, channel, row, col) normalized pixels
            let per_frame = tokens.dim / n;
            for i in 0..tokens.len() {
                data.extend_from_slice(
                    &tokens.token(i)[offset * per_frame..(offset + span) * per_frame],
                );
            }
        }
        TargetKind::Hog => {
            let grids: Vec<PatchGrid> = par::map_slice(clip.frames(), |f| {
                hog_dense(f, &tspec.hog)
                    .and_then(|map| split_into_patch_targets(&map, pspec.patch_size, &tspec.hog))
            })
            .into_iter()
            .collect::<Result<_>>()?;
            for tt in 0..tokens.t {
                for gy in 0..tokens.h {
                    for gx in 0..tokens.w {
                        for grid in &grids[tt * n + offset..tt * n + offset + span] {
                            data.extend_from_slice(grid.vector(gy, gx));
                        }
                    }
                }
            }
        }
    }
    debug_assert_eq!(data.len(), tokens.len() * dim);
    Ok(DenseTargets {
        kind,
        weight,
        dim,
        data,
    })
}

/// Builds a training sample: tokens, the mask, and targets for masked tokens.
pub fn assemble_targets(
    clip: &VideoClip,
    mask: &MaskMap,
    pspec: &PatchSpec,
    tspec: &TargetSpec,
) -> Result<TrainingSample> {
    let dims = pspec.grid_dims(clip)?;
    if mask.dims() != dims {
        return Err(invalid(format!(
            "mask dims {:?} differ from token grid {dims:?}",
            mask.dims()
        )));
    }
    PreparedClip::new(clip, pspec, tspec)?.sample(mask)
}

/// Replaces every masked token with `mask_embedding`.
pub fn apply_mask_tokens(
    tokens: &TokenGrid,
    mask: &MaskMap,
    mask_embedding: &[f64],
) -> Result<TokenGrid> {
    if mask_embedding.len() != tokens.dim {
        return Err(invalid(format!(
            "mask embedding has length {}, tokens have {}",
            mask_embedding.len(),
            tokens.dim
        )));
    }
    if mask.dims() != tokens.dims() {
        return Err(invalid(format!(
            "mask dims {:?} differ from token grid {:?}",
            mask.dims(),
            tokens.dims()
        )));
    }
    let mut out = tokens.clone();
    for i in mask.masked_indices() {
        out.token_mut(i).copy_from_slice(mask_embedding);
    }
    Ok(out)
}
