//! DCGAN-style generator and discriminator.
//!
//! Generator: `dense(latent → 64·(s/4)²) → ReLU → reshape [64, s/4, s/4]
//! → convT(64→32, k4 s2) → ReLU → convT(32→1, k4 s2) → tanh`.
//! Discriminator mirrors it with strided convolutions, leaky-ReLU (0.2) and a
//! sigmoid head. Channel widths are configurable so tests can use tiny nets.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::graph::{ConvGeom, Graph, NodeId};
use super::tensor::Tensor;
use crate::augment::NormalizedImage;
use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;
pub const INIT_STD: f64 = 0.02;

const GEOM: ConvGeom = ConvGeom {
    kernel: 4,
    stride: 2,
    pad: 1,
};

/// Network dimensions shared by the generator and discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GanArch {
    pub latent_dim: usize,
    pub side: usize,
    /// Channels of the coarsest feature map (64 by default).
    pub wide_channels: usize,
    /// Channels of the intermediate feature map (32 by default).
    pub narrow_channels: usize,
}

impl GanArch {
    pub fn new(latent_dim: usize, side: usize) -> Result<Self> {
        Self::with_channels(latent_dim, side, 64, 32)
    }

    pub fn with_channels(
        latent_dim: usize,
        side: usize,
        wide_channels: usize,
        narrow_channels: usize,
    ) -> Result<Self> {
        if side == 0 || side % 4 != 0 {
            return Err(Error::InvalidArgument(format!(
                "image side must be a positive multiple of 4, got {side}"
            )));
        }
        if latent_dim == 0 || wide_channels == 0 || narrow_channels == 0 {
            return Err(Error::InvalidArgument("latent dim and channels must be positive".into()));
        }
        Ok(Self {
            latent_dim,
            side,
            wide_channels,
            narrow_channels,
        })
    }

    fn coarse(&self) -> usize {
        self.side / 4
    }

    fn coarse_len(&self) -> usize {
        self.wide_channels * self.coarse() * self.coarse()
    }
}

/// Latent noise vector drawn i.i.d. from N(0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector {
    pub values: Vec<f64>,
}

impl LatentVector {
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            values: (0..dim).map(|_| StandardNormal.sample(rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn normal_tensor<R: Rng + ?Sized>(shape: Vec<usize>, rng: &mut R) -> Tensor {
    let dist = Normal::new(0.0, INIT_STD).expect("valid std");
    Tensor::from_fn(shape, || dist.sample(rng))
}

/// Access to the trainable tensors of a network, in checkpoint order.
pub trait Parameters {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNet {
    arch: GanArch,
    pub dense_w: Tensor,
    pub dense_b: Tensor,
    pub up1_k: Tensor,
    pub up1_b: Tensor,
    pub up2_k: Tensor,
    pub up2_b: Tensor,
}

impl GeneratorNet {
    pub fn new<R: Rng + ?Sized>(arch: GanArch, rng: &mut R) -> Self {
        let (wc, nc) = (arch.wide_channels, arch.narrow_channels);
        Self {
            dense_w: normal_tensor(vec![arch.latent_dim, arch.coarse_len()], rng),
            dense_b: Tensor::zeros(vec![arch.coarse_len()]),
            up1_k: normal_tensor(vec![wc, nc, 4, 4], rng),
            up1_b: Tensor::zeros(vec![nc]),
            up2_k: normal_tensor(vec![nc, 1, 4, 4], rng),
            up2_b: Tensor::zeros(vec![1]),
            arch,
        }
    }

    pub fn zeros(arch: GanArch) -> Self {
        let (wc, nc) = (arch.wide_channels, arch.narrow_channels);
        Self {
            dense_w: Tensor::zeros(vec![arch.latent_dim, arch.coarse_len()]),
            dense_b: Tensor::zeros(vec![arch.coarse_len()]),
            up1_k: Tensor::zeros(vec![wc, nc, 4, 4]),
            up1_b: Tensor::zeros(vec![nc]),
            up2_k: Tensor::zeros(vec![nc, 1, 4, 4]),
            up2_b: Tensor::zeros(vec![1]),
            arch,
        }
    }

    pub fn arch(&self) -> GanArch {
        self.arch
    }

    /// Rebuilds a generator from tensors in checkpoint order, inferring the architecture.
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Self> {
        let [dense_w, dense_b, up1_k, up1_b, up2_k, up2_b]: [Tensor; 6] = tensors
            .try_into()
            .map_err(|v: Vec<Tensor>| Error::Checkpoint(format!("generator needs 6 tensors, found {}", v.len())))?;
        let bad = || Error::Checkpoint("generator tensor shapes are inconsistent".into());
        let (&[latent, coarse_len], &[wc, nc, 4, 4]) = (dense_w.shape(), up1_k.shape()) else {
            return Err(bad());
        };
        let coarse = ((coarse_len / wc.max(1)) as f64).sqrt().round() as usize;
        let arch = GanArch::with_channels(latent, coarse * 4, wc, nc).map_err(|_| bad())?;
        let expected = GeneratorNet::zeros(arch);
        let net = Self {
            arch,
            dense_w,
            dense_b,
            up1_k,
            up1_b,
            up2_k,
            up2_b,
        };
        if expected.params().iter().zip(net.params()).any(|(a, b)| a.shape() != b.shape()) {
            return Err(bad());
        }
        Ok(net)
    }

    /// Records the generator on `g`. `z` has shape `[N, latent]`; the output
    /// has shape `[N, 1, side, side]`. Returns the output node and the
    /// parameter nodes in [`Parameters::params`] order.
    pub fn build(&self, g: &mut Graph, z: NodeId, trainable: bool) -> Result<(NodeId, Vec<NodeId>)> {
        let zs = g.shape(z);
        if zs.len() != 2 || zs[1] != self.arch.latent_dim {
            return Err(Error::ShapeMismatch {
                expected: vec![zs.first().copied().unwrap_or(1), self.arch.latent_dim],
                actual: zs.to_vec(),
            });
        }
        let n = zs[0];
        let ids = [
            g.param("gen.dense.w", &self.dense_w, trainable)?,
            g.param("gen.dense.b", &self.dense_b, trainable)?,
            g.param("gen.up1.k", &self.up1_k, trainable)?,
            g.param("gen.up1.b", &self.up1_b, trainable)?,
            g.param("gen.up2.k", &self.up2_k, trainable)?,
            g.param("gen.up2.b", &self.up2_b, trainable)?,
        ];
        let q = self.arch.coarse();
        let h = g.dense("gen.dense", z, ids[0], ids[1])?;
        let h = g.relu("gen.dense.relu", h)?;
        let h = g.reshape("gen.reshape", h, vec![n, self.arch.wide_channels, q, q])?;
        let h = g.conv_transpose2d("gen.up1", h, ids[2], ids[3], GEOM)?;
        let h = g.relu("gen.up1.relu", h)?;
        let h = g.conv_transpose2d("gen.up2", h, ids[4], ids[5], GEOM)?;
        let out = g.tanh("gen.tanh", h)?;
        Ok((out, ids.to_vec()))
    }

    /// Batch forward pass without gradient tracking.
    pub fn generate(&self, zs: &[LatentVector]) -> Result<Vec<NormalizedImage>> {
        if zs.is_empty() {
            return Ok(Vec::new());
        }
        let dim = self.arch.latent_dim;
        if let Some(z) = zs.iter().find(|z| z.dim() != dim) {
            return Err(Error::ShapeMismatch {
                expected: vec![dim],
                actual: vec![z.dim()],
            });
        }
        let mut g = Graph::new();
        let flat: Vec<f64> = zs.iter().flat_map(|z| z.values.iter().copied()).collect();
        let z = g.input("gen.z", vec![zs.len(), dim], flat)?;
        let (out, _) = self.build(&mut g, z, false)?;
        let side = self.arch.side;
        g.value(out)
            .chunks(side * side)
            .map(|c| NormalizedImage::new(side, side, c.to_vec()))
            .collect()
    }
}

impl Parameters for GeneratorNet {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.dense_w, &self.dense_b, &self.up1_k, &self.up1_b, &self.up2_k, &self.up2_b]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.dense_w,
            &mut self.dense_b,
            &mut self.up1_k,
            &mut self.up1_b,
            &mut self.up2_k,
            &mut self.up2_b,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorNet {
    arch: GanArch,
    pub down1_k: Tensor,
    pub down1_b: Tensor,
    pub down2_k: Tensor,
    pub down2_b: Tensor,
    pub head_w: Tensor,
    pub head_b: Tensor,
}

impl DiscriminatorNet {
    pub fn new<R: Rng + ?Sized>(arch: GanArch, rng: &mut R) -> Self {
        let (wc, nc) = (arch.wide_channels, arch.narrow_channels);
        Self {
            down1_k: normal_tensor(vec![nc, 1, 4, 4], rng),
            down1_b: Tensor::zeros(vec![nc]),
            down2_k: normal_tensor(vec![wc, nc, 4, 4], rng),
            down2_b: Tensor::zeros(vec![wc]),
            head_w: normal_tensor(vec![arch.coarse_len(), 1], rng),
            head_b: Tensor::zeros(vec![1]),
            arch,
        }
    }

    pub fn zeros(arch: GanArch) -> Self {
        let (wc, nc) = (arch.wide_channels, arch.narrow_channels);
        Self {
            down1_k: Tensor::zeros(vec![nc, 1, 4, 4]),
            down1_b: Tensor::zeros(vec![nc]),
            down2_k: Tensor::zeros(vec![wc, nc, 4, 4]),
            down2_b: Tensor::zeros(vec![wc]),
            head_w: Tensor::zeros(vec![arch.coarse_len(), 1]),
            head_b: Tensor::zeros(vec![1]),
            arch,
        }
    }

    pub fn arch(&self) -> GanArch {
        self.arch
    }

    pub fn from_tensors(tensors: Vec<Tensor>, latent_dim: usize) -> Result<Self> {
        let [down1_k, down1_b, down2_k, down2_b, head_w, head_b]: [Tensor; 6] = tensors
            .try_into()
            .map_err(|v: Vec<Tensor>| Error::Checkpoint(format!("discriminator needs 6 tensors, found {}", v.len())))?;
        let bad = || Error::Checkpoint("discriminator tensor shapes are inconsistent".into());
        let (&[wc, nc, 4, 4], &[coarse_len, 1]) = (down2_k.shape(), head_w.shape()) else {
            return Err(bad());
        };
        let coarse = ((coarse_len / wc.max(1)) as f64).sqrt().round() as usize;
        let arch = GanArch::with_channels(latent_dim, coarse * 4, wc, nc).map_err(|_| bad())?;
        let expected = DiscriminatorNet::zeros(arch);
        let net = Self {
            arch,
            down1_k,
            down1_b,
            down2_k,
            down2_b,
            head_w,
            head_b,
        };
        if expected.params().iter().zip(net.params()).any(|(a, b)| a.shape() != b.shape()) {
            return Err(bad());
        }
        Ok(net)
    }

    /// Records the discriminator on `g`; `x` has shape `[N, 1, side, side]`
    /// and the output (probability of "real") has shape `[N, 1]`.
    pub fn build(&self, g: &mut Graph, x: NodeId, trainable: bool) -> Result<(NodeId, Vec<NodeId>)> {
        let side = self.arch.side;
        let xs = g.shape(x);
        if xs.len() != 4 || xs[1..] != [1, side, side] {
            return Err(Error::ShapeMismatch {
                expected: vec![xs.first().copied().unwrap_or(1), 1, side, side],
                actual: xs.to_vec(),
            });
        }
        let n = xs[0];
        let ids = [
            g.param("disc.down1.k", &self.down1_k, trainable)?,
            g.param("disc.down1.b", &self.down1_b, trainable)?,
            g.param("disc.down2.k", &self.down2_k, trainable)?,
            g.param("disc.down2.b", &self.down2_b, trainable)?,
            g.param("disc.head.w", &self.head_w, trainable)?,
            g.param("disc.head.b", &self.head_b, trainable)?,
        ];
        let h = g.conv2d("disc.down1", x, ids[0], ids[1], GEOM)?;
        let h = g.leaky_relu("disc.down1.lrelu", h, LEAKY_SLOPE)?;
        let h = g.conv2d("disc.down2", h, ids[2], ids[3], GEOM)?;
        let h = g.leaky_relu("disc.down2.lrelu", h, LEAKY_SLOPE)?;
        let h = g.reshape("disc.flatten", h, vec![n, self.arch.coarse_len()])?;
        let h = g.dense("disc.head", h, ids[4], ids[5])?;
        let out = g.sigmoid("disc.sigmoid", h)?;
        Ok((out, ids.to_vec()))
    }

    pub fn classify(&self, imgs: &[NormalizedImage]) -> Result<Vec<f64>> {
        if imgs.is_empty() {
            return Ok(Vec::new());
        }
        let side = self.arch.side;
        if let Some(img) = imgs.iter().find(|i| i.width() != side || i.height() != side) {
            return Err(Error::ShapeMismatch {
                expected: vec![side, side],
                actual: vec![img.height(), img.width()],
            });
        }
        let mut g = Graph::new();
        let flat: Vec<f64> = imgs.iter().flat_map(|i| i.values().iter().copied()).collect();
        let x = g.input("disc.x", vec![imgs.len(), 1, side, side], flat)?;
        let (out, _) = self.build(&mut g, x, false)?;
        Ok(g.value(out).to_vec())
    }
}

impl Parameters for DiscriminatorNet {
    fn params(&self) -> Vec<&Tensor> {
        vec![
            &self.down1_k,
            &self.down1_b,
            &self.down2_k,
            &self.down2_b,
            &self.head_w,
            &self.head_b,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.down1_k,
            &mut self.down1_b,
            &mut self.down2_k,
            &mut self.down2_b,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }
}

pub fn forward_generator(net: &GeneratorNet, z: &LatentVector) -> Result<NormalizedImage> {
    Ok(net.generate(std::slice::from_ref(z))?.remove(0))
}

pub fn forward_discriminator(net: &DiscriminatorNet, img: &NormalizedImage) -> Result<f64> {
    Ok(net.classify(std::slice::from_ref(img))?[0])
}
