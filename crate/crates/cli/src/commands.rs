use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use maskfeat::hog::{hog_dense, ColorMode, HogConfig, HogFeatureMap};
use maskfeat::imaging::{compute_dataset_stats, ChannelStats, VideoClip};
use maskfeat::io::{self, FileKind, Tensor};
use maskfeat::masking::{self, MaskConfig, Strategy};
use maskfeat::predictor::{mean_baseline, predict, train_with_options, TrainConfig, TrainOptions};
use maskfeat::render::{
    hstack, map_from_patch_vectors, render_hog_glyphs, render_masked_input, upscale,
};
use maskfeat::synthetic::{oriented_bars, BarsConfig};
use maskfeat::targets::{
    assemble_targets, PatchSpec, TargetDesign, TargetKind, TargetSelection, TargetSpec,
};
use maskfeat::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::*;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Images and clips both come back as clips; `true` marks a single image.
fn read_frames(path: &Path) -> Result<(VideoClip, bool)> {
    let bytes = read_bytes(path)?;
    match io::sniff(&bytes) {
        Some(FileKind::Pnm) => Ok((VideoClip::from_image(io::decode_pnm(&bytes)?), true)),
        Some(FileKind::Clip) => Ok((io::decode_clip(&bytes)?, false)),
        _ => Err(Error::Format {
            offset: 0,
            message: format!(
                "{} is neither a PGM/PPM image nor a raw clip",
                path.display()
            ),
        }),
    }
}

fn map_tensor(maps: &[HogFeatureMap], single: bool) -> Result<Tensor> {
    let mut dims = maps[0].dims().to_vec();
    if !single {
        dims.insert(0, maps.len());
    }
    Tensor::f64(
        dims,
        maps.iter().flat_map(|m| m.data().iter().copied()).collect(),
    )
}

pub fn hog(args: &HogArgs) -> Result<()> {
    args.hog.config(3).validate()?;
    let (clip, single) = read_frames(&args.input)?;
    let cfg = args.hog.config(clip.channels());
    let maps = clip
        .frames()
        .iter()
        .map(|f| hog_dense(f, &cfg))
        .collect::<Result<Vec<_>>>()?;
    io::write_tensor(&args.out, &map_tensor(&maps, single)?)
}

pub fn mask(args: &MaskArgs) -> Result<()> {
    let strategy = args.strategy.map(Strategy::from).unwrap_or(if args.t == 1 {
        Strategy::Block2D
    } else {
        Strategy::Cube
    });
    let cfg = MaskConfig {
        target_ratio: args.ratio,
        strategy,
        min_block_tokens: args.min_block,
        max_attempts: args.max_attempts,
        seed: args.seed,
        ..MaskConfig::default()
    };
    cfg.validate()?;
    if args.t == 0 || args.h == 0 || args.w == 0 {
        return Err(invalid("grid dimensions must be positive"));
    }
    let m = masking::generate(args.t, args.h, args.w, &cfg)?;
    io::write_mask(&args.out, &m)?;
    println!("ratio={}", m.ratio());
    Ok(())
}

pub fn mask_info(args: &MaskInfoArgs) -> Result<()> {
    let m = io::decode_mask(&read_bytes(&args.mask)?)?;
    let (t, h, w) = m.dims();
    let frames: Vec<String> = (0..t).map(|f| m.frame_ratio(f).to_string()).collect();
    println!("dims={t}x{h}x{w}");
    println!("masked={}", m.count());
    println!("ratio={}", m.ratio());
    println!("temporally_constant={}", m.is_temporally_constant());
    println!("frame_ratios={}", frames.join(","));
    Ok(())
}

#[derive(Serialize)]
struct TargetEntry {
    kind: &'static str,
    weight: f64,
    dim: usize,
    file: String,
}

#[derive(Serialize)]
struct Manifest {
    grid: [usize; 3],
    token_dim: usize,
    tokens: String,
    masked_indices: Vec<usize>,
    targets: Vec<TargetEntry>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

pub fn make_sample(args: &MakeSampleArgs) -> Result<()> {
    args.hog.config(3).validate()?;
    let mut pspec = PatchSpec {
        patch_size: args.patch,
        cube_frames: args.cube_frames.unwrap_or(1),
    };
    pspec.validate()?;
    let explicit = match (&args.mean, &args.std) {
        (Some(m), Some(s)) => Some(ChannelStats::new(m.clone(), s.clone())?),
        _ => None,
    };

    let (clip, _) = read_frames(&args.clip)?;
    let hog = args.hog.config(clip.channels());
    if args.cube_frames.is_none() && clip.frame_count() > 1 {
        pspec.cube_frames = 2;
    }
    let m = io::decode_mask(&read_bytes(&args.mask)?)?;
    if m.count() == 0 {
        return Err(invalid("mask has no masked tokens; nothing to supervise"));
    }
    let stats = match explicit {
        Some(s) => s,
        None => compute_dataset_stats(clip.frames())?,
    };
    let selection = match args.target {
        TargetArg::Pixel => TargetSelection::Single(TargetKind::Pixel),
        TargetArg::Hog => TargetSelection::Single(TargetKind::Hog),
        TargetArg::Both => TargetSelection::pixel_and_hog(),
    };
    let design = match args.design {
        DesignArg::Center => TargetDesign::CenterPatch,
        DesignArg::Cube => TargetDesign::FullCube,
    };
    let tspec = TargetSpec {
        selection,
        hog,
        stats,
        design,
    };
    let sample = assemble_targets(&clip, &m, &pspec, &tspec)?;

    let tok = &sample.tokens;
    let tokens_path = with_suffix(&args.out, ".tokens.bin");
    io::write_tensor(
        &tokens_path,
        &Tensor::f64(vec![tok.t, tok.h, tok.w, tok.dim], tok.data.clone())?,
    )?;
    let mut targets = Vec::new();
    for set in &sample.targets {
        let path = with_suffix(&args.out, &format!(".target-{}.bin", set.kind.name()));
        let data = set
            .entries
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        io::write_tensor(&path, &Tensor::f64(vec![set.entries.len(), set.dim], data)?)?;
        targets.push(TargetEntry {
            kind: set.kind.name(),
            weight: set.weight,
            dim: set.dim,
            file: file_name(&path),
        });
    }
    let manifest = Manifest {
        grid: [tok.t, tok.h, tok.w],
        token_dim: tok.dim,
        tokens: file_name(&tokens_path),
        masked_indices: sample.masked_indices(),
        targets,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(with_suffix(&args.out, ".manifest.json"), json + "\n")?;
    Ok(())
}

/// Everything needed to rebuild a toy run's data and model inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyRun {
    pub count: usize,
    pub data_seed: u64,
    pub patch: usize,
    pub hog: HogConfig,
    pub ratio: f64,
    pub remask_each_epoch: bool,
    pub train: TrainConfig,
}

struct ToyData {
    data: Vec<(VideoClip, u64)>,
    pspec: PatchSpec,
    tspec: TargetSpec,
    mcfg: MaskConfig,
}

impl ToyRun {
    fn build(&self) -> Result<ToyData> {
        let mcfg = MaskConfig {
            target_ratio: self.ratio,
            ..MaskConfig::default()
        };
        mcfg.validate()?;
        self.train.validate()?;
        if self.count == 0 {
            return Err(invalid("the synthetic set needs at least one image"));
        }
        let data = oriented_bars(self.count, self.data_seed, &BarsConfig::default());
        let stats = compute_dataset_stats(data.iter().map(|(c, _)| &c.frames()[0]))?;
        Ok(ToyData {
            data,
            pspec: PatchSpec::image(self.patch),
            tspec: TargetSpec::hog(self.hog, stats, TargetDesign::CenterPatch),
            mcfg,
        })
    }
}

const MODEL_FILE: &str = "model.bin";
const CONFIG_FILE: &str = "train_config.json";

pub fn train_toy(args: &TrainToyArgs) -> Result<()> {
    let run = ToyRun {
        count: args.data.count,
        data_seed: args.data.data_seed,
        patch: 8,
        hog: HogConfig {
            cell_size: 4,
            color_mode: ColorMode::Gray,
            ..HogConfig::default()
        },
        ratio: args.ratio,
        remask_each_epoch: args.remask,
        train: TrainConfig {
            learning_rate: args.lr,
            epochs: args.epochs,
            batch_size: args.batch,
            seed: args.seed,
            ..TrainConfig::default()
        },
    };
    let toy = run.build()?;
    let (_, baseline) = mean_baseline(&toy.data, &toy.pspec, &toy.tspec)?;
    let opts = TrainOptions {
        remask_each_epoch: run.remask_each_epoch,
        ..TrainOptions::default()
    };
    let out = train_with_options(
        &toy.data, &toy.pspec, &toy.tspec, &toy.mcfg, &run.train, opts,
    )?;

    fs::create_dir_all(&args.out_dir)?;
    io::write_checkpoint(args.out_dir.join(MODEL_FILE), &out.model)?;
    let mut csv = String::from("epoch,loss\n");
    for (e, l) in out.loss_curve.iter().enumerate() {
        writeln!(csv, "{},{:.16e}", e + 1, l).expect("writing to a String");
    }
    fs::write(args.out_dir.join("loss.csv"), csv)?;
    let json = serde_json::to_string_pretty(&run).expect("config serializes");
    fs::write(args.out_dir.join(CONFIG_FILE), json + "\n")?;

    let last = *out.loss_curve.last().expect("at least one epoch");
    println!("baseline_loss={baseline}");
    println!("final_loss={last}");
    println!("ratio_to_baseline={}", last / baseline);
    Ok(())
}

fn load_run(dir: &Path) -> Result<ToyRun> {
    let path = dir.join(CONFIG_FILE);
    let text = String::from_utf8(read_bytes(&path)?).map_err(|e| Error::Format {
        offset: e.utf8_error().valid_up_to() as u64,
        message: format!("{} is not UTF-8", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: 0,
        message: format!("{}: {e}", path.display()),
    })
}

pub fn render_hog(args: &RenderHogArgs) -> Result<()> {
    if args.glyph < 2 {
        return Err(invalid("glyph size must be at least 2 pixels"));
    }
    let img = match (&args.map, &args.model_dir) {
        (Some(map), _) => render_map_file(map, args.frame, args.glyph)?,
        (None, Some(dir)) => render_prediction(dir, args.sample, args.glyph)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    io::write_ppm(&args.out, &img)
}

fn render_map_file(path: &Path, frame: usize, glyph: usize) -> Result<maskfeat::Image> {
    let t = io::decode_tensor(&read_bytes(path)?)?;
    let values = t.to_f64();
    let (dims, per) = match t.dims() {
        [c, cy, cx, b] => ([*c, *cy, *cx, *b], 0),
        [n, c, cy, cx, b] if frame < *n => ([*c, *cy, *cx, *b], frame),
        [n, ..] if t.dims().len() == 5 => {
            return Err(invalid(format!(
                "frame {frame} is out of range for {n} frames"
            )))
        }
        d => {
            return Err(invalid(format!(
                "expected a 4- or 5-axis HOG tensor, got dims {d:?}"
            )))
        }
    };
    let len: usize = dims.iter().product();
    let [c, cy, cx, b] = dims;
    let map = HogFeatureMap::from_parts(cy, cx, c, b, values[per * len..(per + 1) * len].to_vec())?;
    let cfg = HogConfig {
        num_bins: b,
        ..HogConfig::default()
    };
    render_hog_glyphs(&map, &cfg, glyph)
}

/// Masked input, predicted HOG at masked patches, and the target HOG.
fn render_prediction(dir: &Path, index: usize, glyph: usize) -> Result<maskfeat::Image> {
    let run = load_run(dir)?;
    let model = io::read_checkpoint(dir.join(MODEL_FILE))?;
    let toy = run.build()?;
    let (clip, seed) = toy.data.get(index).ok_or_else(|| {
        invalid(format!(
            "sample {index} is out of range for {} images",
            toy.data.len()
        ))
    })?;
    let frame = &clip.frames()[0];
    let (t, h, w) = toy.pspec.grid_dims(clip)?;
    let m = masking::generate(
        t,
        h,
        w,
        &MaskConfig {
            seed: *seed,
            ..toy.mcfg
        },
    )?;
    let sample = assemble_targets(clip, &m, &toy.pspec, &toy.tspec)?;
    let preds = predict(&model, &sample.tokens, &m)?;

    let cfg = &toy.tspec.hog;
    let predicted = map_from_patch_vectors(h, w, toy.pspec.patch_size, cfg, &preds)?;
    let target = hog_dense(frame, cfg)?;
    let cells_x = target.cells_x();
    if !(cells_x * glyph).is_multiple_of(frame.width()) {
        return Err(invalid(format!(
            "glyph size {glyph} must make the glyph panel an integer multiple of the {}-pixel image",
            frame.width()
        )));
    }
    let input = upscale(
        &render_masked_input(frame, &m, 0, toy.pspec.patch_size)?,
        cells_x * glyph / frame.width(),
    )?;
    hstack(&[
        input,
        render_hog_glyphs(&predicted, cfg, glyph)?,
        render_hog_glyphs(&target, cfg, glyph)?,
    ])
}
