//! Small self-contained GAN: tensors, tape autodiff, DCGAN-style networks,
//! Adam, binary cross-entropy and the adversarial training loop.

pub mod adam;
pub mod checkpoint;
pub mod graph;
pub mod net;
pub mod tensor;
pub mod train;

pub use adam::AdamState;
pub use graph::{bce_loss, ConvGeom, Gradients, Graph, NodeId};
pub use net::{
    forward_discriminator, forward_generator, DiscriminatorNet, GanArch, GeneratorNet,
    LatentVector, Parameters,
};
pub use tensor::Tensor;
pub use train::{sample, train_gan, train_gan_observed, EpochLoss, TrainConfig, TrainedGan};

use std::path::Path;

use crate::error::Result;

pub fn save_generator(net: &GeneratorNet, path: impl AsRef<Path>) -> Result<()> {
    checkpoint::save(&net.params(), path)
}

pub fn load_generator(path: impl AsRef<Path>) -> Result<GeneratorNet> {
    GeneratorNet::from_tensors(checkpoint::load(path)?)
}

pub fn save_discriminator(net: &DiscriminatorNet, path: impl AsRef<Path>) -> Result<()> {
    checkpoint::save(&net.params(), path)
}

pub fn load_discriminator(path: impl AsRef<Path>, latent_dim: usize) -> Result<DiscriminatorNet> {
    DiscriminatorNet::from_tensors(checkpoint::load(path)?, latent_dim)
}
