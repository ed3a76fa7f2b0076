//! GAN-based training-set augmentation for sky/cloud image segmentation.
//!
//! The pipeline has two stages. A small GAN is trained on R−B sky images and
//! its samples receive pseudo ground-truth maps from 2-means clustering plus
//! majority smoothing. A PLS2 regressor then maps images to segmentation
//! maps; generated samples are kept only if they do not lower validation R²,
//! and both models are compared with R², ROC-derived thresholds and
//! precision/recall/F-score.

pub mod augment;
pub mod error;
pub mod evalmetrics;
pub mod filtering;
pub mod gan;
pub mod imageio;
pub mod pls;
pub mod pseudolabel;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
