//! Independent reference implementations used only by tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyaug::imageio::{split_dataset, synth_dataset, BinaryMap, RawImage};
use skyaug::pls::XY;
use skyaug::pseudolabel::{Candidate, Provenance};

/// Least squares with intercept via the normal equations, solved by
/// Gauss–Jordan elimination with partial pivoting. Returns predictions on `x_new`.
pub fn ols_predict(x: &[Vec<f64>], y: &[Vec<f64>], x_new: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let p = x[0].len();
    let q = y[0].len();
    let mean = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
    let xm: Vec<f64> = (0..p).map(|j| mean(x, j)).collect();
    let ym: Vec<f64> = (0..q).map(|j| mean(y, j)).collect();
    // augmented [XᵀX | XᵀY] on centred data
    let mut a = vec![vec![0.0; p + q]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..n).map(|r| (x[r][i] - xm[i]) * (x[r][j] - xm[j])).sum();
        }
        for j in 0..q {
            a[i][p + j] = (0..n).map(|r| (x[r][i] - xm[i]) * (y[r][j] - ym[j])).sum();
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    x_new
        .iter()
        .map(|row| {
            (0..q)
                .map(|j| ym[j] + (0..p).map(|i| (row[i] - xm[i]) * a[i][p + j]).sum::<f64>())
                .collect()
        })
        .collect()
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Random full-rank regression fixture: `n × p` features, `q` noisy linear targets.
pub fn regression_fixture(n: usize, p: usize, q: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let beta = DMatrix::from_fn(p, q, |_, _| rng.random_range(-2.0..2.0));
    let noise = DMatrix::from_fn(n, q, |_, _| 0.1 * rng.random_range(-1.0..1.0));
    let y = &x * beta + noise;
    (x, y)
}

/// Brute-force majority filter counted straight from the window definition.
pub fn brute_majority(map: &BinaryMap, r: usize) -> BinaryMap {
    let (w, h) = (map.width() as isize, map.height() as isize);
    let r = r as isize;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (mut c, mut n) = (0, 0);
            for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                    n += 1;
                    c += map.get(xx as usize, yy as usize) as i32;
                }
            }
            out.push(match (2 * c).cmp(&n) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => map.get(x as usize, y as usize),
            });
        }
    }
    BinaryMap::new(map.width(), map.height(), out).unwrap()
}

pub struct FilterFixture {
    pub train_pairs: Vec<(RawImage, BinaryMap)>,
    pub train: XY,
    pub val: XY,
    /// Candidates: duplicates of training points, fresh synthetic pairs and
    /// one adversarial pair (uniform noise with an inverted threshold map).
    pub candidates: Vec<Candidate>,
    pub duplicate_ids: Vec<usize>,
    pub adversarial_id: usize,
}

fn cand(image: RawImage, map: BinaryMap, index: usize) -> Candidate {
    Candidate::new(
        image,
        map,
        Provenance {
            generator_id: "fixture".into(),
            latent_seed: index as u64,
            index,
        },
    )
}

/// 115 synthetic pairs at side 16, split 69/18/28; ten candidates.
pub fn filter_fixture() -> FilterFixture {
    let data = synth_dataset(115, 16, 21).unwrap();
    let split = split_dataset(data.len(), 7).unwrap();
    let pick = |ids: &[usize]| ids.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    let train_pairs = pick(&split.train_ids);
    let val_pairs = pick(&split.val_ids);
    let xy = |v: &[(RawImage, BinaryMap)]| XY::from_pairs(&v.iter().map(|(i, m)| (i, m)).collect::<Vec<_>>()).unwrap();

    let mut candidates = Vec::new();
    let duplicate_ids: Vec<usize> = (0..4).collect();
    for (k, i) in [0usize, 10, 30, 60].into_iter().enumerate() {
        let (img, map) = train_pairs[i].clone();
        candidates.push(cand(img, map, k));
    }
    for (img, map) in synth_dataset(5, 16, 777).unwrap() {
        let k = candidates.len();
        candidates.push(cand(img, map, k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let noise = RawImage::new(16, 16, (0..256).map(|_| rng.random()).collect()).unwrap();
    let mean = noise.mean();
    let inverted = BinaryMap::new(16, 16, noise.pixels().iter().map(|&p| (p as f64) < mean).collect()).unwrap();
    let adversarial_id = candidates.len();
    candidates.push(cand(noise, inverted, adversarial_id));

    FilterFixture {
        train: xy(&train_pairs),
        val: xy(&val_pairs),
        train_pairs,
        candidates,
        duplicate_ids,
        adversarial_id,
    }
}
