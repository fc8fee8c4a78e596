//! Building blocks for masked feature prediction pre-training.
//!
//! * [`imaging`]: channel-planar rasters, color transforms, dataset statistics
//! * [`hog`]: dense HOG feature maps and per-patch HOG targets
//! * [`masking`]: block-wise, frame, tube and cube token masks
//! * [`targets`]: cube tokenization and per-masked-token targets
//! * [`losses`]: masked ℓ2, cosine and multi-task losses
//! * [`predictor`]: a linear masked predictor with analytic gradients
//! * [`io`]: PGM/PPM and the binary containers
//!
//! With the default `parallel` feature, HOG evaluation, batch mask generation
//! and per-batch gradient evaluation run on rayon. Results are bit-identical
//! to the sequential build.

pub mod error;
pub mod hog;
pub mod imaging;
pub mod io;
pub mod losses;
pub mod masking;
pub mod par;
pub mod predictor;
pub mod render;
pub mod synthetic;
pub mod targets;

pub use error::{Error, Result};
pub use hog::{hog_dense, HogConfig, HogFeatureMap};
pub use imaging::{ChannelStats, Image, VideoClip};
pub use masking::{MaskConfig, MaskMap, Strategy};
pub use predictor::{LinearPredictor, TrainConfig};
pub use targets::{PatchSpec, TargetSpec, TrainingSample};
