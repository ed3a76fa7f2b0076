//! Small end-to-end scenarios shared by several test targets.

#![allow(dead_code)]

use skyaug::augment::{normalize, NormalizedImage};
use skyaug::gan::{forward_generator, train::latent_for, train_gan_observed, TrainConfig};
use skyaug::imageio::synth_dataset;

fn mean_abs_diff(a: &NormalizedImage, b: &NormalizedImage) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.values().len() as f64
}

/// Mean |G(z) − target| at epochs 1 and `epochs` for a one-image dataset.
pub fn smoke_run(epochs: usize) -> (f64, f64, bool) {
    let (img, _) = synth_dataset(1, 16, 4).unwrap().remove(0);
    let target = normalize(&img);
    let cfg = TrainConfig {
        epochs,
        image_side: 16,
        seed: 17,
        ..Default::default()
    };
    let z = latent_for(cfg.latent_dim, 99);
    let mut dists = Vec::new();
    let mut in_range = true;
    train_gan_observed(std::slice::from_ref(&target), &cfg, |_, g| {
        let out = forward_generator(g, &z).unwrap();
        in_range &= out.values().iter().all(|v| v.abs() < 1.0);
        dists.push(mean_abs_diff(&out, &target));
    })
    .unwrap();
    (dists[0], *dists.last().unwrap(), in_range)
}
