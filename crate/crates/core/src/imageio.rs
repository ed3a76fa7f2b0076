//! Image containers, R−B channel extraction, dataset splitting and file I/O.
//!
//! Images and maps are persisted as binary PGM (`P5`, maxval 255). Maps are
//! written with values {0, 255} and read back with a threshold at 128.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Colour image with 8-bit channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Single-channel 8-bit intensity grid (the rescaled R−B channel), row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }
}

/// Per-pixel cloud/sky labels (`true` = cloud), row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    labels: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize, labels: Vec<bool>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.labels[y * self.width + x]
    }

    pub fn cloud_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn same_dims(&self, img: &RawImage) -> bool {
        self.width == img.width && self.height == img.height
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(Error::ShapeMismatch {
            expected: vec![height, width],
            actual: vec![len],
        });
    }
    Ok(())
}

/// Rescaled red-minus-blue channel: `round((R − B + 255) / 2)`, half away from zero.
pub fn extract_rb(img: &RgbImage) -> RawImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, _, b]| ((r as f64 - b as f64 + 255.0) / 2.0).round() as u8)
        .collect();
    RawImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        })
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(SplitTag::Train),
            "val" => Ok(SplitTag::Val),
            "test" => Ok(SplitTag::Test),
            other => Err(Error::InvalidArgument(format!("unknown split tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train_ids.len(), self.val_ids.len(), self.test_ids.len())
    }

    /// Split tag for every index `0..n`.
    pub fn tags(&self) -> Vec<SplitTag> {
        let n = self.train_ids.len() + self.val_ids.len() + self.test_ids.len();
        let mut tags = vec![SplitTag::Train; n];
        for &i in &self.val_ids {
            tags[i] = SplitTag::Val;
        }
        for &i in &self.test_ids {
            tags[i] = SplitTag::Test;
        }
        tags
    }
}

pub const TRAIN_FRACTION: f64 = 0.60;
pub const VAL_FRACTION: f64 = 0.1565;

/// Seeded shuffle partition into train/val/test with sizes
/// `round(0.60·n)`, `round(0.1565·n)` and the remainder.
pub fn split_dataset(n: usize, seed: u64) -> Result<DatasetSplit> {
    if n < 3 {
        return Err(Error::SplitImpossible(n));
    }
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let n_val = ((VAL_FRACTION * n as f64).round() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut train_ids = order[..n_train].to_vec();
    let mut val_ids = order[n_train..n_train + n_val].to_vec();
    let mut test_ids = order[n_train + n_val..].to_vec();
    train_ids.sort_unstable();
    val_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(DatasetSplit {
        train_ids,
        val_ids,
        test_ids,
        seed,
    })
}

// ---------------------------------------------------------------------------
// PGM files

struct Pgm {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0usize;

    let next_token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos).ok_or_else(|| Error::malformed(path, "empty file"))?;
    if magic != "P5" {
        return Err(Error::malformed(
            path,
            format!("expected binary greyscale magic `P5`, found `{magic}`"),
        ));
    }
    let mut header = [0u32; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(&mut pos)
            .ok_or_else(|| Error::malformed(path, format!("missing {name}")))?;
        *slot = tok
            .parse()
            .map_err(|_| Error::malformed(path, format!("invalid {name} `{tok}`")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(Error::malformed(path, "dimension zero"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::malformed(path, format!("invalid maxval {maxval}")));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            maxval,
        });
    }
    // single whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::malformed(path, "missing raster separator"));
    }
    pos += 1;
    let (width, height) = (width as usize, height as usize);
    let need = width * height;
    if bytes.len() - pos < need {
        return Err(Error::malformed(
            path,
            format!("truncated raster: need {need} bytes, have {}", bytes.len() - pos),
        ));
    }
    let mut data = bytes[pos..pos + need].to_vec();
    if maxval != 255 {
        for v in &mut data {
            if *v as u32 > maxval {
                return Err(Error::malformed(path, "sample exceeds maxval"));
            }
            *v = ((*v as f64) * 255.0 / maxval as f64).round() as u8;
        }
    }
    Ok(Pgm {
        width,
        height,
        data,
    })
}

fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(path, &bytes)
}

fn write_pgm(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{width} {height}\n255\n")
        .and_then(|_| w.write_all(data))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_image_file(path: impl AsRef<Path>) -> Result<RawImage> {
    let pgm = read_pgm(path.as_ref())?;
    RawImage::new(pgm.width, pgm.height, pgm.data)
}

pub fn save_image_file(img: &RawImage, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(path.as_ref(), img.width, img.height, &img.pixels)
}

pub fn load_map_file(path: impl AsRef<Path>) -> Result<BinaryMap> {
    let pgm = read_pgm(path.as_ref())?;
    let labels = pgm.data.iter().map(|&v| v >= 128).collect();
    BinaryMap::new(pgm.width, pgm.height, labels)
}

pub fn save_map_file(map: &BinaryMap, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = map.labels.iter().map(|&l| if l { 255 } else { 0 }).collect();
    write_pgm(path.as_ref(), map.width, map.height, &data)
}

/// Reads any colour image format supported by the `image` crate.
pub fn load_rgb_file(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    RgbImage::new(w as usize, h as usize, pixels)
}

/// Reads a ground-truth map in any format the `image` crate supports
/// (luma, threshold at 128).
pub fn load_map_any(path: impl AsRef<Path>) -> Result<BinaryMap> {
    let path = path.as_ref();
    if is_pgm(path) {
        return load_map_file(path);
    }
    let img = image::open(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .to_luma8();
    let (w, h) = img.dimensions();
    BinaryMap::new(
        w as usize,
        h as usize,
        img.pixels().map(|p| p.0[0] >= 128).collect(),
    )
}

fn is_pgm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

// ---------------------------------------------------------------------------
// Downsampling

/// Box average over the source area covered by each target pixel.
pub fn downsample_image(img: &RawImage, side: usize) -> Result<RawImage> {
    if img.width == side && img.height == side {
        return Ok(img.clone());
    }
    let mut out = Vec::with_capacity(side * side);
    for ty in 0..side {
        let (y0, y1) = box_range(ty, side, img.height);
        for tx in 0..side {
            let (x0, x1) = box_range(tx, side, img.width);
            let mut sum = 0u64;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += img.get(x, y) as u64;
                }
            }
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            out.push((sum as f64 / count).round() as u8);
        }
    }
    RawImage::new(side, side, out)
}

/// Box majority; ties go to cloud.
pub fn downsample_map(map: &BinaryMap, side: usize) -> Result<BinaryMap> {
    if map.width == side && map.height == side {
        return Ok(map.clone());
    }
    let mut out = Vec::with_capacity(side * side);
    for ty in 0..side {
        let (y0, y1) = box_range(ty, side, map.height);
        for tx in 0..side {
            let (x0, x1) = box_range(tx, side, map.width);
            let mut clouds = 0usize;
            for y in y0..y1 {
                for x in x0..x1 {
                    clouds += map.get(x, y) as usize;
                }
            }
            out.push(2 * clouds >= (y1 - y0) * (x1 - x0));
        }
    }
    BinaryMap::new(side, side, out)
}

fn box_range(t: usize, target: usize, source: usize) -> (usize, usize) {
    let lo = t * source / target;
    let hi = ((t + 1) * source / target).max(lo + 1).min(source);
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Synthetic fixture

/// Procedural cloud-like dataset: multi-octave smoothed value noise rescaled
/// to [0, 255]; ground truth marks pixels strictly above the image mean.
pub fn synth_dataset(count: usize, side: usize, seed: u64) -> Result<Vec<(RawImage, BinaryMap)>> {
    if count == 0 {
        return Err(Error::InvalidArgument("synthetic count must be >= 1".into()));
    }
    if side < 8 {
        return Err(Error::InvalidArgument(format!(
            "synthetic side must be >= 8, got {side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let field = value_noise(side, &mut rng);
        let img = rescale_to_u8(side, &field)?;
        let map = threshold_at_mean(&img);
        out.push((img, map));
    }
    Ok(out)
}

/// `label = pixel > mean(image)`.
pub fn threshold_at_mean(img: &RawImage) -> BinaryMap {
    let mean = img.mean();
    BinaryMap {
        width: img.width,
        height: img.height,
        labels: img.pixels.iter().map(|&p| p as f64 > mean).collect(),
    }
}

fn value_noise(side: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut field = vec![0.0; side * side];
    // (lattice cells across the image, amplitude)
    let octaves = [(2usize, 1.0), (4, 0.5), (8, 0.25)];
    for (cells, amp) in octaves {
        let n = cells + 1;
        let lattice: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        for y in 0..side {
            let fy = y as f64 * cells as f64 / side as f64;
            let (iy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
            for x in 0..side {
                let fx = x as f64 * cells as f64 / side as f64;
                let (ix, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
                let a = lattice[iy * n + ix];
                let b = lattice[iy * n + ix + 1];
                let c = lattice[(iy + 1) * n + ix];
                let d = lattice[(iy + 1) * n + ix + 1];
                let top = a + (b - a) * tx;
                let bottom = c + (d - c) * tx;
                field[y * side + x] += amp * (top + (bottom - top) * ty);
            }
        }
    }
    field
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn rescale_to_u8(side: usize, field: &[f64]) -> Result<RawImage> {
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pixels = field
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    RawImage::new(side, side, pixels)
}

// ---------------------------------------------------------------------------
// Manifest

/// One `image_path,map_path,split` line of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image_path: PathBuf,
    pub map_path: PathBuf,
    pub split: SplitTag,
}

pub const MANIFEST_HEADER: &str = "image_path,map_path,split";

pub fn write_manifest(records: &[ManifestRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&format!(
            "{},{},{}\n",
            r.image_path.display(),
            r.map_path.display(),
            r.split
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a manifest; relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (lineno == 0 && line == MANIFEST_HEADER) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::malformed(
                path,
                format!("line {}: expected 3 fields, found {}", lineno + 1, fields.len()),
            ));
        }
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        records.push(ManifestRecord {
            image_path: resolve(fields[0]),
            map_path: resolve(fields[1]),
            split: fields[2]
                .parse()
                .map_err(|e: Error| Error::malformed(path, format!("line {}: {e}", lineno + 1)))?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: u8, g: u8, b: u8) -> RgbImage {
        RgbImage::new(1, 1, vec![[r, g, b]]).unwrap()
    }

    #[test]
    fn rb_extremes_and_midpoint() {
        assert_eq!(extract_rb(&rgb(255, 17, 0)).pixels(), &[255]);
        assert_eq!(extract_rb(&rgb(0, 200, 255)).pixels(), &[0]);
        assert_eq!(extract_rb(&rgb(100, 0, 100)).pixels(), &[128]);
    }

    #[test]
    fn rb_monotone_and_full_range() {
        let mut seen = [false; 256];
        for r in 0..=255u8 {
            for b in 0..=255u8 {
                let v = extract_rb(&rgb(r, 0, b)).pixels()[0];
                seen[v as usize] = true;
                if r < 255 {
                    assert!(extract_rb(&rgb(r + 1, 0, b)).pixels()[0] >= v);
                }
                if b < 255 {
                    assert!(extract_rb(&rgb(r, 0, b + 1)).pixels()[0] <= v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn split_sizes() {
        assert_eq!(split_dataset(115, 7).unwrap().sizes(), (69, 18, 28));
        assert_eq!(split_dataset(10, 1).unwrap().sizes(), (6, 2, 2));
        assert_eq!(split_dataset(115, 7).unwrap(), split_dataset(115, 7).unwrap());
        assert!(matches!(split_dataset(2, 0), Err(Error::SplitImpossible(2))));
    }

    #[test]
    fn split_partitions_indices() {
        for n in 3..60 {
            let s = split_dataset(n, n as u64).unwrap();
            let mut all: Vec<usize> = s
                .train_ids
                .iter()
                .chain(&s.val_ids)
                .chain(&s.test_ids)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn pgm_roundtrip_all_intensities() {
        let dir = tempfile::tempdir().unwrap();
        let img = RawImage::new(16, 16, (0..=255u8).collect()).unwrap();
        let path = dir.path().join("all.pgm");
        save_image_file(&img, &path).unwrap();
        assert_eq!(load_image_file(&path).unwrap(), img);

        let small = RawImage::filled(4, 4, 17).unwrap();
        save_image_file(&small, &path).unwrap();
        assert_eq!(load_image_file(&path).unwrap(), small);
    }

    #[test]
    fn map_file_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        fs::write(&path, b"P5\n2 2\n255\n\x00\xff\x7f\x80").unwrap();
        let map = load_map_file(&path).unwrap();
        assert_eq!(map.labels(), &[false, true, false, true]);

        let map = BinaryMap::new(2, 1, vec![true, false]).unwrap();
        save_map_file(&map, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"P5\n2 1\n255\n\xff\x00");
        assert_eq!(load_map_file(&path).unwrap(), map);
    }

    #[test]
    fn pgm_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        fs::write(&path, b"P5\n2 2\n65535\n\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        let err = load_image_file(&path).unwrap_err();
        assert!(err.to_string().contains("unsupported bit depth"), "{err}");

        fs::write(&path, b"P5\n0 2\n255\n").unwrap();
        assert!(load_image_file(&path).unwrap_err().to_string().contains("dimension zero"));

        fs::write(&path, b"P2\n1 1\n255\n0\n").unwrap();
        assert!(matches!(load_image_file(&path), Err(Error::Malformed { .. })));

        fs::write(&path, b"P5\n4 4\n255\n\x00").unwrap();
        assert!(matches!(load_image_file(&path), Err(Error::Malformed { .. })));
    }

    #[test]
    fn pgm_header_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        fs::write(&path, b"P5 # comment\n# another\n1 2 255\n\x05\x06").unwrap();
        assert_eq!(load_image_file(&path).unwrap().pixels(), &[5, 6]);
    }

    #[test]
    fn synth_consistency() {
        let data = synth_dataset(115, 32, 3).unwrap();
        assert_eq!(data.len(), 115);
        for (img, map) in &data {
            assert!(map.same_dims(img));
            assert_eq!(&threshold_at_mean(img), map);
            assert!(map.cloud_count() > 0 && map.cloud_count() < 32 * 32);
        }
        assert_eq!(synth_dataset(3, 16, 9).unwrap(), synth_dataset(3, 16, 9).unwrap());
        assert!(synth_dataset(0, 16, 9).is_err());
        assert!(synth_dataset(1, 7, 9).is_err());
    }

    #[test]
    fn downsampling() {
        let img = RawImage::new(4, 4, (0..16).map(|v| v * 10).collect()).unwrap();
        let small = downsample_image(&img, 2).unwrap();
        // top-left block: 0, 10, 40, 50
        assert_eq!(small.get(0, 0), 25);
        let map = BinaryMap::new(4, 4, (0..16).map(|v| v % 4 >= 2).collect()).unwrap();
        let small = downsample_map(&map, 2).unwrap();
        assert_eq!(small.labels(), &[false, true, false, true]);
        let odd = downsample_image(&RawImage::filled(500, 500, 9).unwrap(), 32).unwrap();
        assert!(odd.pixels().iter().all(|&p| p == 9));
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.csv");
        let records = vec![
            ManifestRecord {
                image_path: "data/a.pgm".into(),
                map_path: "data/a_map.pgm".into(),
                split: SplitTag::Val,
            },
            ManifestRecord {
                image_path: "/abs/b.pgm".into(),
                map_path: "/abs/b_map.pgm".into(),
                split: SplitTag::Test,
            },
        ];
        write_manifest(&records, &path).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back[0].image_path, dir.path().join("data/a.pgm"));
        assert_eq!(back[0].split, SplitTag::Val);
        assert_eq!(back[1].map_path, PathBuf::from("/abs/b_map.pgm"));

        fs::write(&path, "a,b\n").unwrap();
        assert!(read_manifest(&path).is_err());
    }
}
