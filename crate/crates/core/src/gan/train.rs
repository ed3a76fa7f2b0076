use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{AdamState, DEFAULT_LEARNING_RATE};
use super::graph::Graph;
use super::net::{DiscriminatorNet, GanArch, GeneratorNet, LatentVector, Parameters};
use crate::augment::{denormalize, NormalizedImage};
use crate::error::{Error, Result};
use crate::imageio::RawImage;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub image_side: usize,
    pub latent_dim: usize,
    pub learning_rate: f64,
    pub wide_channels: usize,
    pub narrow_channels: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 1000,
            image_side: 32,
            latent_dim: 100,
            learning_rate: DEFAULT_LEARNING_RATE,
            wide_channels: 64,
            narrow_channels: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn arch(&self) -> Result<GanArch> {
        GanArch::with_channels(
            self.latent_dim,
            self.image_side,
            self.wide_channels,
            self.narrow_channels,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument("batch_size and epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        self.arch().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedGan {
    pub generator: GeneratorNet,
    pub discriminator: DiscriminatorNet,
    pub history: Vec<EpochLoss>,
}

pub fn train_gan(data: &[NormalizedImage], cfg: &TrainConfig) -> Result<TrainedGan> {
    train_gan_observed(data, cfg, |_, _| {})
}

/// Trains with alternating discriminator/generator updates, calling
/// `observer` after every epoch.
pub fn train_gan_observed(
    data: &[NormalizedImage],
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochLoss, &GeneratorNet),
) -> Result<TrainedGan> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("GAN training data is empty".into()));
    }
    let side = cfg.image_side;
    if let Some(img) = data.iter().find(|i| i.width() != side || i.height() != side) {
        return Err(Error::ShapeMismatch {
            expected: vec![side, side],
            actual: vec![img.height(), img.width()],
        });
    }
    let arch = cfg.arch()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut generator = GeneratorNet::new(arch, &mut rng);
    let mut discriminator = DiscriminatorNet::new(arch, &mut rng);
    let mut adam_g = AdamState::new(cfg.learning_rate);
    let mut adam_d = AdamState::new(cfg.learning_rate);
    let pixels = side * side;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut d_sum, mut g_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let b = chunk.len();

            // discriminator: real → 1, generated → 0
            let zs: Vec<LatentVector> = (0..b)
                .map(|_| LatentVector::sample(cfg.latent_dim, &mut rng))
                .collect();
            let fakes = generator.generate(&zs)?;
            let mut x = Vec::with_capacity(2 * b * pixels);
            for &i in chunk {
                x.extend_from_slice(data[i].values());
            }
            for f in &fakes {
                x.extend_from_slice(f.values());
            }
            let mut targets = vec![1.0; b];
            targets.resize(2 * b, 0.0);
            let mut g = Graph::new();
            let xin = g.input("disc.batch", vec![2 * b, 1, side, side], x)?;
            let (prob, ids) = discriminator.build(&mut g, xin, true)?;
            let loss = g.bce("disc.bce", prob, targets)?;
            d_sum += g.value(loss)[0];
            let grads = g.backward(loss)?;
            let mut params = discriminator.params_mut();
            for (p, &id) in params.iter_mut().zip(&ids) {
                grads.store_into(id, p);
            }
            adam_d.step(&mut params);

            // generator: fool the frozen discriminator
            let zs: Vec<f64> = (0..b)
                .flat_map(|_| LatentVector::sample(cfg.latent_dim, &mut rng).values)
                .collect();
            let mut g = Graph::new();
            let z = g.input("gen.z", vec![b, cfg.latent_dim], zs)?;
            let (img, gen_ids) = generator.build(&mut g, z, true)?;
            let (prob, _) = discriminator.build(&mut g, img, false)?;
            let loss = g.bce("gen.bce", prob, vec![1.0; b])?;
            g_sum += g.value(loss)[0];
            let grads = g.backward(loss)?;
            let mut params = generator.params_mut();
            for (p, &id) in params.iter_mut().zip(&gen_ids) {
                grads.store_into(id, p);
            }
            adam_g.step(&mut params);
            batches += 1;
        }
        let record = EpochLoss {
            epoch,
            d_loss: d_sum / batches as f64,
            g_loss: g_sum / batches as f64,
        };
        observer(&record, &generator);
        history.push(record);
    }
    Ok(TrainedGan {
        generator,
        discriminator,
        history,
    })
}

/// Latent vector for candidate `index` of a sampling run seeded with `seed`.
pub fn latent_for(dim: usize, seed: u64) -> LatentVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LatentVector::sample(dim, &mut rng)
}

/// `n` generator samples mapped back to [0, 255]; sample `i` uses latent seed `seed + i`.
pub fn sample(net: &GeneratorNet, n: usize, seed: u64) -> Result<Vec<RawImage>> {
    let dim = net.arch().latent_dim;
    (0..n as u64)
        .map(|i| {
            let z = latent_for(dim, seed.wrapping_add(i));
            let img = net.generate(std::slice::from_ref(&z))?;
            Ok(denormalize(&img[0]))
        })
        .collect()
}

pub fn loss_history_csv(history: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,d_loss,g_loss\n");
    for h in history {
        let _ = writeln!(out, "{},{:.10},{:.10}", h.epoch, h.d_loss, h.g_loss);
    }
    out
}

pub fn write_loss_history(history: &[EpochLoss], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, loss_history_csv(history)).map_err(|e| Error::io(path, e))
}
