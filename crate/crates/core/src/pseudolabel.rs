//! Pseudo ground truth for generated images: 2-means clustering of pixel
//! intensities followed by iterated majority smoothing.

use crate::error::Result;
use crate::gan::{sample, GeneratorNet};
use crate::imageio::{BinaryMap, RawImage};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub max_iters: usize,
    /// Convergence threshold on centroid movement (intensity units).
    pub tol: f64,
    /// Unused by the deterministic min/max initialization; kept for provenance.
    pub seed: u64,
    /// Label the darker cluster as cloud instead of the brighter one.
    pub invert_cloud_rule: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            seed: 0,
            invert_cloud_rule: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothConfig {
    pub window_radius: usize,
    pub max_passes: usize,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            window_radius: 2,
            max_passes: 3,
        }
    }
}

/// Final centroids of the 1-D 2-means run, `(low, high)`.
pub fn two_means_centroids(img: &RawImage, cfg: &ClusterConfig) -> (f64, f64) {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let lo = hist.iter().position(|&c| c > 0).unwrap_or(0) as f64;
    let hi = hist.iter().rposition(|&c| c > 0).unwrap_or(0) as f64;
    let (mut c0, mut c1) = (lo, hi);
    if lo == hi {
        return (c0, c1);
    }
    for _ in 0..cfg.max_iters {
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0u64, 0.0, 0u64);
        for (v, &count) in hist.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let v = v as f64;
            // ties go to the lower cluster
            if (v - c0).abs() <= (v - c1).abs() {
                s0 += v * count as f64;
                n0 += count;
            } else {
                s1 += v * count as f64;
                n1 += count;
            }
        }
        let new0 = if n0 > 0 { s0 / n0 as f64 } else { c0 };
        let new1 = if n1 > 0 { s1 / n1 as f64 } else { c1 };
        let moved = (new0 - c0).abs().max((new1 - c1).abs());
        c0 = new0;
        c1 = new1;
        if moved < cfg.tol {
            break;
        }
    }
    (c0, c1)
}

/// Pixel-wise cloud map from 2-means on intensities; the brighter cluster is
/// cloud unless `invert_cloud_rule` is set. A constant image is all sky.
pub fn kmeans_pixels(img: &RawImage, cfg: &ClusterConfig) -> BinaryMap {
    let (c0, c1) = two_means_centroids(img, cfg);
    if c0 == c1 {
        return BinaryMap::filled(img.width(), img.height(), false).expect("valid dims");
    }
    let labels = img
        .pixels()
        .iter()
        .map(|&p| {
            let v = p as f64;
            let bright = (v - c0).abs() > (v - c1).abs();
            bright != cfg.invert_cloud_rule
        })
        .collect();
    BinaryMap::new(img.width(), img.height(), labels).expect("valid dims")
}

/// One majority-filter pass; ties keep the current label.
pub fn majority_pass(map: &BinaryMap, radius: usize) -> BinaryMap {
    let (w, h) = (map.width(), map.height());
    // summed-area table of cloud counts
    let mut sat = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += map.get(x, y) as u32;
            sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius + 1).min(w));
            let clouds = sat[y1 * (w + 1) + x1] + sat[y0 * (w + 1) + x0]
                - sat[y0 * (w + 1) + x1]
                - sat[y1 * (w + 1) + x0];
            let total = ((y1 - y0) * (x1 - x0)) as u32;
            out.push(match (2 * clouds).cmp(&total) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => map.get(x, y),
            });
        }
    }
    BinaryMap::new(w, h, out).expect("valid dims")
}

/// Iterated majority filter, stopping at a fixed point or after `max_passes`.
pub fn smooth_map(map: &BinaryMap, cfg: &SmoothConfig) -> BinaryMap {
    let mut current = map.clone();
    for _ in 0..cfg.max_passes {
        let next = majority_pass(&current, cfg.window_radius.max(1));
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Where a candidate came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub generator_id: String,
    pub latent_seed: u64,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Unset,
    Favorable,
    Unfavorable,
}

/// A generated image paired with its smoothed pseudo ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub image: RawImage,
    pub map: BinaryMap,
    pub provenance: Provenance,
    pub verdict: Verdict,
    pub r2_val_with: Option<f64>,
}

impl Candidate {
    pub fn new(image: RawImage, map: BinaryMap, provenance: Provenance) -> Self {
        assert!(map.same_dims(&image), "candidate image/map dimensions differ");
        Self {
            image,
            map,
            provenance,
            verdict: Verdict::Unset,
            r2_val_with: None,
        }
    }
}

/// Pseudo ground truth for one image: cluster then smooth.
pub fn pseudo_label(img: &RawImage, cluster: &ClusterConfig, smooth: &SmoothConfig) -> BinaryMap {
    smooth_map(&kmeans_pixels(img, cluster), smooth)
}

/// Samples `n` images (latent seeds `seed..seed + n`) and labels each.
pub fn make_candidates(
    gen: &GeneratorNet,
    generator_id: &str,
    n: usize,
    seed: u64,
    cluster: &ClusterConfig,
    smooth: &SmoothConfig,
) -> Result<Vec<Candidate>> {
    let images = sample(gen, n, seed)?;
    Ok(images
        .into_iter()
        .enumerate()
        .map(|(index, image)| {
            let map = pseudo_label(&image, cluster, smooth);
            Candidate::new(
                image,
                map,
                Provenance {
                    generator_id: generator_id.to_string(),
                    latent_seed: seed.wrapping_add(index as u64),
                    index,
                },
            )
        })
        .collect())
}
