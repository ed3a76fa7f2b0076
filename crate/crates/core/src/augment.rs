//! Rotation/reflection augmentation and the [-1, 1] normalization pair used
//! around GAN training.
//!
//! Rotations are counter-clockwise and are applied before the flip. The 16
//! transforms are ordered rotation-major, flip-minor:
//! `(0°, none), (0°, h), (0°, v), (0°, both), (90°, none), ...`.
//! Since `flip = both` equals a 180° rotation, the 16 transforms realize each
//! of the 8 dihedral symmetries of the square exactly twice.

use crate::error::{Error, Result};
use crate::imageio::{BinaryMap, RawImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flip {
    None,
    Horizontal,
    Vertical,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformId {
    pub rotation: Rotation,
    pub flip: Flip,
}

impl TransformId {
    pub const IDENTITY: TransformId = TransformId {
        rotation: Rotation::R0,
        flip: Flip::None,
    };

    /// All 16 transforms in the fixed rotation-major order.
    pub fn all() -> [TransformId; 16] {
        let rotations = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];
        let flips = [Flip::None, Flip::Horizontal, Flip::Vertical, Flip::Both];
        std::array::from_fn(|i| TransformId {
            rotation: rotations[i / 4],
            flip: flips[i % 4],
        })
    }

    /// One representative per dihedral element (flips restricted to none/horizontal).
    pub fn distinct() -> [TransformId; 8] {
        let all = Self::all();
        std::array::from_fn(|i| all[(i / 2) * 4 + i % 2])
    }

    /// Maps an output coordinate back to the source coordinate it copies.
    /// `(w, h)` are the source dimensions.
    fn source_coord(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        let (ow, oh) = self.output_dims(w, h);
        let (x, y) = match self.flip {
            Flip::None => (x, y),
            Flip::Horizontal => (ow - 1 - x, y),
            Flip::Vertical => (x, oh - 1 - y),
            Flip::Both => (ow - 1 - x, oh - 1 - y),
        };
        match self.rotation {
            Rotation::R0 => (x, y),
            Rotation::R90 => (w - 1 - y, x),
            Rotation::R180 => (w - 1 - x, h - 1 - y),
            Rotation::R270 => (y, h - 1 - x),
        }
    }

    pub fn output_dims(self, w: usize, h: usize) -> (usize, usize) {
        match self.rotation {
            Rotation::R0 | Rotation::R180 => (w, h),
            Rotation::R90 | Rotation::R270 => (h, w),
        }
    }
}

/// Permutes a row-major grid; returns the new `(width, height, data)`.
pub fn permute_grid<T: Copy>(
    width: usize,
    height: usize,
    data: &[T],
    t: TransformId,
) -> (usize, usize, Vec<T>) {
    let (ow, oh) = t.output_dims(width, height);
    let mut out = Vec::with_capacity(data.len());
    for y in 0..oh {
        for x in 0..ow {
            let (sx, sy) = t.source_coord(x, y, width, height);
            out.push(data[sy * width + sx]);
        }
    }
    (ow, oh, out)
}

/// Grids that can be rotated and flipped.
pub trait Transformable: Sized {
    fn apply_transform(&self, t: TransformId) -> Self;
}

impl Transformable for RawImage {
    fn apply_transform(&self, t: TransformId) -> Self {
        let (w, h, data) = permute_grid(self.width(), self.height(), self.pixels(), t);
        RawImage::new(w, h, data).expect("permutation preserves dimensions")
    }
}

impl Transformable for BinaryMap {
    fn apply_transform(&self, t: TransformId) -> Self {
        let (w, h, data) = permute_grid(self.width(), self.height(), self.labels(), t);
        BinaryMap::new(w, h, data).expect("permutation preserves dimensions")
    }
}

impl Transformable for NormalizedImage {
    fn apply_transform(&self, t: TransformId) -> Self {
        let (width, height, values) = permute_grid(self.width, self.height, &self.values, t);
        NormalizedImage {
            width,
            height,
            values,
        }
    }
}

pub fn apply_transform<T: Transformable>(img: &T, t: TransformId) -> T {
    img.apply_transform(t)
}

/// The 16 rotated/reflected copies, in [`TransformId::all`] order.
pub fn sixteen_fold<T: Transformable>(img: &T) -> Vec<T> {
    augment_fold(img, false)
}

/// Like [`sixteen_fold`]; with `dedupe` only the 8 distinct dihedral copies
/// are produced.
pub fn augment_fold<T: Transformable>(img: &T, dedupe: bool) -> Vec<T> {
    if dedupe {
        TransformId::distinct()
            .iter()
            .map(|&t| img.apply_transform(t))
            .collect()
    } else {
        TransformId::all()
            .iter()
            .map(|&t| img.apply_transform(t))
            .collect()
    }
}

/// Real-valued grid in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl NormalizedImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width * height != values.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![height, width],
                actual: vec![values.len()],
            });
        }
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "normalized value {v} outside [-1, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn normalize_pixel(p: u8) -> f64 {
    p as f64 / 127.5 - 1.0
}

/// `round(x·127.5 + 127.5)`, half away from zero, after clamping to [-1, 1].
pub fn denormalize_value(x: f64) -> u8 {
    (x.clamp(-1.0, 1.0) * 127.5 + 127.5).round() as u8
}

pub fn normalize(img: &RawImage) -> NormalizedImage {
    NormalizedImage {
        width: img.width(),
        height: img.height(),
        values: img.pixels().iter().map(|&p| normalize_pixel(p)).collect(),
    }
}

pub fn denormalize(img: &NormalizedImage) -> RawImage {
    let pixels = img.values.iter().map(|&x| denormalize_value(x)).collect();
    RawImage::new(img.width, img.height, pixels).expect("dimensions already validated")
}
