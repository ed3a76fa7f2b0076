//! Flat `key = value` pipeline configuration.
//!
//! Lines are `key = value`; `#` starts a comment; values may be quoted.
//! Unknown keys are rejected so typos surface as usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use skyaug::evalmetrics::ThresholdCriterion;
use skyaug::filtering::FilterMode;
use skyaug::gan::TrainConfig;
use skyaug::pls::R2Mode;
use skyaug::pseudolabel::{ClusterConfig, SmoothConfig};

use crate::error::{io_err, CliError, Result};

/// Where images come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic,
    /// Directory with `images/` and `GTmaps/`, or an `image_path,map_path,split` manifest.
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset: DatasetSource,
    pub synthetic_count: usize,
    pub synthetic_seed: u64,
    pub side: usize,
    pub split_seed: u64,
    /// Drop the duplicated half of the 16-fold augmentation.
    pub augment_dedupe: bool,
    pub gan: TrainConfig,
    pub candidate_count: usize,
    pub candidate_seed: u64,
    pub cluster: ClusterConfig,
    pub smooth: SmoothConfig,
    pub pls_max_comp: usize,
    pub r2_mode: R2Mode,
    pub filter_mode: FilterMode,
    pub threshold_criterion: ThresholdCriterion,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic,
            synthetic_count: 115,
            synthetic_seed: 1,
            side: 32,
            split_seed: 7,
            augment_dedupe: false,
            gan: TrainConfig::default(),
            candidate_count: 64,
            candidate_seed: 1000,
            cluster: ClusterConfig::default(),
            smooth: SmoothConfig::default(),
            pls_max_comp: 20,
            r2_mode: R2Mode::Pooled,
            filter_mode: FilterMode::Independent,
            threshold_criterion: ThresholdCriterion::Youden,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Every recognised key with its one-line description, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset", "`synthetic`, a directory with images/ and GTmaps/, or a manifest CSV"),
    ("synthetic_count", "number of synthetic image/map pairs"),
    ("synthetic_seed", "seed of the synthetic generator"),
    ("side", "working resolution (square, multiple of 4)"),
    ("split_seed", "seed of the train/validation/test shuffle"),
    ("augment_dedupe", "keep only the 8 distinct dihedral images per training image"),
    ("gan_epochs", "GAN training epochs"),
    ("gan_batch_size", "GAN minibatch size"),
    ("gan_learning_rate", "Adam learning rate for both networks"),
    ("gan_latent_dim", "latent vector length"),
    ("gan_wide_channels", "channels of the coarsest feature map"),
    ("gan_narrow_channels", "channels of the intermediate feature map"),
    ("gan_seed", "seed for GAN initialisation, shuffling and noise"),
    ("candidate_count", "number of generated candidates"),
    ("candidate_seed", "latent seed of the first candidate"),
    ("cluster_max_iters", "2-means iteration cap"),
    ("cluster_tol", "2-means convergence tolerance"),
    ("invert_cloud_rule", "label the darker cluster as cloud"),
    ("smooth_radius", "majority-filter window radius"),
    ("smooth_max_passes", "majority-filter pass cap"),
    ("pls_max_comp", "largest n_comp in the tuning sweep"),
    ("r2_mode", "`pooled` or `per_image`"),
    ("filter_mode", "`independent` or `sequential`"),
    ("threshold_criterion", "`youden`, `closest_to_corner` or `max_f`"),
    ("output_dir", "directory for every artifact"),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {value:?} for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid boolean {value:?} for `{key}`"))),
    }
}

pub fn r2_mode_name(m: R2Mode) -> &'static str {
    match m {
        R2Mode::Pooled => "pooled",
        R2Mode::PerImage => "per_image",
    }
}

pub fn criterion_name(c: ThresholdCriterion) -> &'static str {
    match c {
        ThresholdCriterion::Youden => "youden",
        ThresholdCriterion::ClosestToCorner => "closest_to_corner",
        ThresholdCriterion::MaxFScore => "max_f",
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim().trim_matches('"');
        match key {
            "dataset" => {
                self.dataset = if v == "synthetic" {
                    DatasetSource::Synthetic
                } else {
                    DatasetSource::Path(PathBuf::from(v))
                }
            }
            "synthetic_count" => self.synthetic_count = parse_num(key, v)?,
            "synthetic_seed" => self.synthetic_seed = parse_num(key, v)?,
            "side" => self.side = parse_num(key, v)?,
            "split_seed" => self.split_seed = parse_num(key, v)?,
            "augment_dedupe" => self.augment_dedupe = parse_bool(key, v)?,
            "gan_epochs" => self.gan.epochs = parse_num(key, v)?,
            "gan_batch_size" => self.gan.batch_size = parse_num(key, v)?,
            "gan_learning_rate" => self.gan.learning_rate = parse_num(key, v)?,
            "gan_latent_dim" => self.gan.latent_dim = parse_num(key, v)?,
            "gan_wide_channels" => self.gan.wide_channels = parse_num(key, v)?,
            "gan_narrow_channels" => self.gan.narrow_channels = parse_num(key, v)?,
            "gan_seed" => self.gan.seed = parse_num(key, v)?,
            "candidate_count" => self.candidate_count = parse_num(key, v)?,
            "candidate_seed" => self.candidate_seed = parse_num(key, v)?,
            "cluster_max_iters" => self.cluster.max_iters = parse_num(key, v)?,
            "cluster_tol" => self.cluster.tol = parse_num(key, v)?,
            "invert_cloud_rule" => self.cluster.invert_cloud_rule = parse_bool(key, v)?,
            "smooth_radius" => self.smooth.window_radius = parse_num(key, v)?,
            "smooth_max_passes" => self.smooth.max_passes = parse_num(key, v)?,
            "pls_max_comp" => self.pls_max_comp = parse_num(key, v)?,
            "r2_mode" => {
                self.r2_mode = match v {
                    "pooled" => R2Mode::Pooled,
                    "per_image" => R2Mode::PerImage,
                    _ => return Err(CliError::Usage(format!("invalid r2_mode {v:?}"))),
                }
            }
            "filter_mode" => {
                self.filter_mode = v
                    .parse()
                    .map_err(|_| CliError::Usage(format!("invalid filter_mode {v:?}")))?
            }
            "threshold_criterion" => {
                self.threshold_criterion = match v {
                    "youden" => ThresholdCriterion::Youden,
                    "closest_to_corner" => ThresholdCriterion::ClosestToCorner,
                    "max_f" => ThresholdCriterion::MaxFScore,
                    _ => return Err(CliError::Usage(format!("invalid threshold_criterion {v:?}"))),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.side == 0 || self.side % 4 != 0 {
            return usage("side must be a positive multiple of 4");
        }
        if self.synthetic_count < 3 {
            return usage("synthetic_count must be at least 3");
        }
        if self.pls_max_comp == 0 {
            return usage("pls_max_comp must be at least 1");
        }
        if self.smooth.window_radius == 0 {
            return usage("smooth_radius must be at least 1");
        }
        self.gan_config().validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn gan_config(&self) -> TrainConfig {
        TrainConfig {
            image_side: self.side,
            ..self.gan.clone()
        }
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let dataset = match &self.dataset {
            DatasetSource::Synthetic => "synthetic".to_string(),
            DatasetSource::Path(p) => p.display().to_string(),
        };
        let pairs: Vec<(&str, String)> = vec![
            ("dataset", dataset),
            ("synthetic_count", self.synthetic_count.to_string()),
            ("synthetic_seed", self.synthetic_seed.to_string()),
            ("side", self.side.to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("augment_dedupe", self.augment_dedupe.to_string()),
            ("gan_epochs", self.gan.epochs.to_string()),
            ("gan_batch_size", self.gan.batch_size.to_string()),
            ("gan_learning_rate", self.gan.learning_rate.to_string()),
            ("gan_latent_dim", self.gan.latent_dim.to_string()),
            ("gan_wide_channels", self.gan.wide_channels.to_string()),
            ("gan_narrow_channels", self.gan.narrow_channels.to_string()),
            ("gan_seed", self.gan.seed.to_string()),
            ("candidate_count", self.candidate_count.to_string()),
            ("candidate_seed", self.candidate_seed.to_string()),
            ("cluster_max_iters", self.cluster.max_iters.to_string()),
            ("cluster_tol", self.cluster.tol.to_string()),
            ("invert_cloud_rule", self.cluster.invert_cloud_rule.to_string()),
            ("smooth_radius", self.smooth.window_radius.to_string()),
            ("smooth_max_passes", self.smooth.max_passes.to_string()),
            ("pls_max_comp", self.pls_max_comp.to_string()),
            ("r2_mode", r2_mode_name(self.r2_mode).to_string()),
            ("filter_mode", self.filter_mode.to_string()),
            ("threshold_criterion", criterion_name(self.threshold_criterion).to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The config rendered back as a loadable file.
    pub fn to_text(&self) -> String {
        let snap = self.snapshot();
        let mut out = String::new();
        for (key, doc) in KEYS {
            out.push_str(&format!("# {doc}\n{key} = {}\n", snap[*key]));
        }
        out
    }
}
