//! Batch pipeline around the `skyaug` library: config handling, stage
//! orchestration, artifact layout and the run manifest.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use pipeline::{Outcome, Pipeline, Stage};
