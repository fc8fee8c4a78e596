use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maskfeat::hog::{ColorMode, HogConfig, Norm};
use maskfeat::masking::Strategy;

#[derive(Debug, Parser)]
#[command(
    name = "maskfeat",
    version,
    about = "Masked feature prediction toolkit: HOG targets, masks, samples, toy training"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dense HOG of a PGM/PPM image or a raw clip, written as a tensor.
    Hog(HogArgs),
    /// Sample a token mask and write it as a mask file.
    Mask(MaskArgs),
    /// Print the dimensions and statistics of a mask file.
    MaskInfo(MaskInfoArgs),
    /// Tokenize a clip and assemble targets for the masked tokens.
    MakeSample(MakeSampleArgs),
    /// Train the linear predictor on the synthetic oriented-bars set.
    TrainToy(TrainToyArgs),
    /// Render HOG glyphs of a feature map or of a trained model's predictions.
    RenderHog(RenderHogArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    None,
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ColorArg {
    Gray,
    Rgb,
    Opp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Block,
    Frame,
    Tube,
    Cube,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Block => Strategy::Block2D,
            StrategyArg::Frame => Strategy::Frame,
            StrategyArg::Tube => Strategy::Tube,
            StrategyArg::Cube => Strategy::Cube,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct HogFlags {
    /// Orientation bins over [0, 180) degrees.
    #[arg(long, default_value_t = 9)]
    pub bins: usize,
    /// Cell side in pixels.
    #[arg(long, default_value_t = 8)]
    pub cell: usize,
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    pub norm: NormArg,
    /// Defaults to rgb for color input and gray for single-channel input.
    #[arg(long, value_enum)]
    pub color: Option<ColorArg>,
}

impl HogFlags {
    /// Configuration for input with `channels` channels.
    pub fn config(&self, channels: usize) -> HogConfig {
        HogConfig {
            num_bins: self.bins,
            cell_size: self.cell,
            norm: match self.norm {
                NormArg::None => Norm::None,
                NormArg::L1 => Norm::L1,
                NormArg::L2 => Norm::L2,
            },
            color_mode: match self.color.unwrap_or(if channels == 1 {
                ColorArg::Gray
            } else {
                ColorArg::Rgb
            }) {
                ColorArg::Gray => ColorMode::Gray,
                ColorArg::Rgb => ColorMode::Rgb,
                ColorArg::Opp => ColorMode::Opponent,
            },
            ..HogConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct HogArgs {
    /// PGM/PPM image or raw clip (detected from the file's leading bytes).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub hog: HogFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = 14)]
    pub h: usize,
    #[arg(long, default_value_t = 14)]
    pub w: usize,
    #[arg(long, default_value_t = 0.4)]
    pub ratio: f64,
    /// Defaults to block for single-frame grids and cube otherwise.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest block, in tokens.
    #[arg(long, default_value_t = 4)]
    pub min_block: usize,
    /// Consecutive rejected block proposals before giving up.
    #[arg(long, default_value_t = 100)]
    pub max_attempts: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskInfoArgs {
    #[arg(long)]
    pub mask: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    Pixel,
    Hog,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    Center,
    Cube,
}

#[derive(Debug, Args)]
pub struct MakeSampleArgs {
    #[arg(long)]
    pub clip: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, value_enum, default_value_t = TargetArg::Hog)]
    pub target: TargetArg,
    #[arg(long, value_enum, default_value_t = DesignArg::Center)]
    pub design: DesignArg,
    #[arg(long, default_value_t = 16)]
    pub patch: usize,
    /// Frames per space-time token. Defaults to 1 for single images and 2 for clips.
    #[arg(long)]
    pub cube_frames: Option<usize>,
    #[command(flatten)]
    pub hog: HogFlags,
    /// Per-channel means for pixel normalization, comma separated.
    /// Defaults to the clip's own statistics.
    #[arg(long, value_delimiter = ',', requires = "std")]
    pub mean: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "mean")]
    pub std: Option<Vec<f64>>,
    /// Output prefix; writes `<out>.tokens.bin`, `<out>.target-<kind>.bin`
    /// and `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ToyDataFlags {
    /// Number of synthetic images.
    #[arg(long, default_value_t = 256)]
    pub count: usize,
    #[arg(long, default_value_t = 7)]
    pub data_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[command(flatten)]
    pub data: ToyDataFlags,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.4)]
    pub ratio: f64,
    /// Draw fresh masks every epoch instead of one fixed mask per image.
    #[arg(long)]
    pub remask: bool,
    /// Receives `model.bin`, `loss.csv` and `train_config.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderHogArgs {
    /// HOG tensor written by `hog` ([C, cy, cx, B] or [T, C, cy, cx, B]).
    #[arg(
        long,
        conflicts_with = "model_dir",
        required_unless_present = "model_dir"
    )]
    pub map: Option<PathBuf>,
    /// Frame to draw from a clip tensor.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Directory written by `train-toy`; renders masked input, prediction and target.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Synthetic image to predict on.
    #[arg(long, default_value_t = 0)]
    pub sample: usize,
    /// Glyph side in pixels per cell.
    #[arg(long, default_value_t = 16)]
    pub glyph: usize,
    #[arg(long)]
    pub out: PathBuf,
}
