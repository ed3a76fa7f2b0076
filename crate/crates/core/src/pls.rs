//! PLS2 regression (NIPALS) from flattened images to flattened maps, plus the
//! validation sweep over the number of components.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gan::{checkpoint, Tensor};
use crate::imageio::{BinaryMap, RawImage};

pub const INNER_TOL: f64 = 1e-10;
pub const INNER_MAX_ITERS: usize = 500;
pub const SCORE_UNDERFLOW: f64 = 1e-12;

/// Feature matrix: one row per image, pixels rescaled to [0, 1].
pub fn design_matrix(images: &[&RawImage]) -> Result<DMatrix<f64>> {
    let cols = images.first().map_or(0, |i| i.pixels().len());
    if let Some(bad) = images.iter().find(|i| i.pixels().len() != cols) {
        return Err(Error::ShapeMismatch {
            expected: vec![cols],
            actual: vec![bad.pixels().len()],
        });
    }
    Ok(DMatrix::from_fn(images.len(), cols, |r, c| {
        images[r].pixels()[c] as f64 / 255.0
    }))
}

/// Target matrix: one row per map, labels as {0, 1}.
pub fn target_matrix(maps: &[&BinaryMap]) -> Result<DMatrix<f64>> {
    let cols = maps.first().map_or(0, |m| m.labels().len());
    if let Some(bad) = maps.iter().find(|m| m.labels().len() != cols) {
        return Err(Error::ShapeMismatch {
            expected: vec![cols],
            actual: vec![bad.labels().len()],
        });
    }
    Ok(DMatrix::from_fn(maps.len(), cols, |r, c| {
        maps[r].labels()[c] as u8 as f64
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    pub x_mean: RowDVector<f64>,
    pub y_mean: RowDVector<f64>,
    /// x-weights, features × n_comp.
    pub x_weights: DMatrix<f64>,
    /// x-loadings, features × n_comp.
    pub x_loadings: DMatrix<f64>,
    /// y-loadings scaled by the inner regression, outputs × n_comp.
    pub y_loadings: DMatrix<f64>,
    /// Training x-scores, samples × n_comp.
    pub x_scores: DMatrix<f64>,
    /// Regression coefficients, features × outputs.
    pub coef: DMatrix<f64>,
    pub n_comp: usize,
}

fn column_means(m: &DMatrix<f64>) -> RowDVector<f64> {
    let n = m.nrows() as f64;
    RowDVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

fn center(m: &DMatrix<f64>, mean: &RowDVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        row -= mean;
    }
    out
}

/// Fits PLS2 with NIPALS on column-centred data (no variance scaling).
///
/// Extraction stops early when a score vector's norm drops below
/// [`SCORE_UNDERFLOW`]; the achieved count is stored in `n_comp`.
pub fn fit_pls2(x: &DMatrix<f64>, y: &DMatrix<f64>, n_comp: usize) -> Result<PlsModel> {
    let (n, p) = x.shape();
    if y.nrows() != n {
        return Err(Error::ShapeMismatch {
            expected: vec![n, y.ncols()],
            actual: vec![y.nrows(), y.ncols()],
        });
    }
    if n < 2 || p == 0 || y.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "PLS needs at least 2 samples and non-empty features/targets, got X {n}x{p}, Y {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    let max_comp = (n - 1).min(p);
    if n_comp == 0 || n_comp > max_comp {
        return Err(Error::InvalidArgument(format!(
            "n_comp must be in 1..={max_comp}, got {n_comp}"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("PLS input contains non-finite values".into()));
    }
    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let mut xk = center(x, &x_mean);
    let mut yk = center(y, &y_mean);
    if xk.norm() == 0.0 {
        return Err(Error::Degenerate("X has no variation".into()));
    }
    if yk.norm() == 0.0 {
        return Err(Error::Degenerate("Y has no variation".into()));
    }

    let mut ws = Vec::with_capacity(n_comp);
    let mut ps = Vec::with_capacity(n_comp);
    let mut cs = Vec::with_capacity(n_comp);
    let mut ts = Vec::with_capacity(n_comp);
    for _ in 0..n_comp {
        let Some((w, t)) = nipals_component(&xk, &yk) else {
            break;
        };
        let tt = t.dot(&t);
        let p_load = xk.tr_mul(&t) / tt;
        let c_load = yk.tr_mul(&t) / tt;
        xk -= &t * p_load.transpose();
        yk -= &t * c_load.transpose();
        ws.push(w);
        ps.push(p_load);
        cs.push(c_load);
        ts.push(t);
    }
    if ws.is_empty() {
        return Err(Error::Degenerate("no PLS component could be extracted".into()));
    }
    let x_weights = DMatrix::from_columns(&ws);
    let x_loadings = DMatrix::from_columns(&ps);
    let y_loadings = DMatrix::from_columns(&cs);
    let x_scores = DMatrix::from_columns(&ts);
    let coef = coefficients(&x_weights, &x_loadings, &y_loadings)?;
    Ok(PlsModel {
        n_comp: ws.len(),
        x_mean,
        y_mean,
        x_weights,
        x_loadings,
        y_loadings,
        x_scores,
        coef,
    })
}

/// One NIPALS component on the deflated matrices; `None` when the score underflows.
fn nipals_component(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    // u starts at the Y column with the largest variance
    let start = y
        .column_iter()
        .map(|c| c.norm_squared())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
        .0;
    let mut u: DVector<f64> = y.column(start).into_owned();
    let mut t_old: Option<DVector<f64>> = None;
    let mut w = DVector::zeros(x.ncols());
    let mut t = DVector::zeros(x.nrows());
    for _ in 0..INNER_MAX_ITERS {
        w = x.tr_mul(&u);
        let wn = w.norm();
        if wn == 0.0 {
            return None;
        }
        w /= wn;
        t = x * &w;
        let mut q = y.tr_mul(&t);
        let qn = q.norm();
        if qn == 0.0 {
            break;
        }
        q /= qn;
        u = y * &q;
        if let Some(prev) = &t_old {
            let tn = t.norm();
            if tn == 0.0 || (&t - prev).norm() / tn < INNER_TOL {
                break;
            }
        }
        t_old = Some(t.clone());
    }
    if t.norm() < SCORE_UNDERFLOW {
        return None;
    }
    Some((w, t))
}

fn coefficients(w: &DMatrix<f64>, p: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ptw = p.tr_mul(w);
    let inv = ptw
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("PᵀW is singular".into()))?;
    Ok(w * inv * c.transpose())
}

impl PlsModel {
    pub fn n_features(&self) -> usize {
        self.x_mean.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.y_mean.len()
    }

    /// The model restricted to its first `k` components (identical to fitting with `k`).
    pub fn truncate(&self, k: usize) -> Result<PlsModel> {
        let k = k.clamp(1, self.n_comp);
        let w = self.x_weights.columns(0, k).into_owned();
        let p = self.x_loadings.columns(0, k).into_owned();
        let c = self.y_loadings.columns(0, k).into_owned();
        Ok(PlsModel {
            coef: coefficients(&w, &p, &c)?,
            x_mean: self.x_mean.clone(),
            y_mean: self.y_mean.clone(),
            x_weights: w,
            x_loadings: p,
            y_loadings: c,
            x_scores: self.x_scores.columns(0, k).into_owned(),
            n_comp: k,
        })
    }

    /// `ŷ = (x − x_mean)·B + y_mean` for every row.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::ShapeMismatch {
                expected: vec![x.nrows(), self.n_features()],
                actual: vec![x.nrows(), x.ncols()],
            });
        }
        let mut out = center(x, &self.x_mean) * &self.coef;
        for mut row in out.row_iter_mut() {
            row += &self.y_mean;
        }
        Ok(out)
    }

    fn to_tensors(&self) -> Vec<Tensor> {
        fn row_major(m: &DMatrix<f64>) -> Tensor {
            Tensor::new(vec![m.nrows(), m.ncols()], m.transpose().as_slice().to_vec())
                .expect("matrix dims")
        }
        vec![
            Tensor::new(vec![self.x_mean.len()], self.x_mean.iter().copied().collect()).unwrap(),
            Tensor::new(vec![self.y_mean.len()], self.y_mean.iter().copied().collect()).unwrap(),
            row_major(&self.x_weights),
            row_major(&self.x_loadings),
            row_major(&self.y_loadings),
            row_major(&self.x_scores),
            row_major(&self.coef),
        ]
    }

    fn from_tensors(tensors: Vec<Tensor>) -> Result<Self> {
        let bad = |what: &str| Error::Checkpoint(format!("PLS checkpoint: {what}"));
        let [xm, ym, w, p, c, t, b]: [Tensor; 7] = tensors
            .try_into()
            .map_err(|_| bad("expected 7 tensors"))?;
        let matrix = |t: &Tensor| -> Result<DMatrix<f64>> {
            match t.shape() {
                &[r, c] => Ok(DMatrix::from_row_slice(r, c, &t.values)),
                _ => Err(bad("expected a matrix")),
            }
        };
        let model = PlsModel {
            x_mean: RowDVector::from_row_slice(&xm.values),
            y_mean: RowDVector::from_row_slice(&ym.values),
            x_weights: matrix(&w)?,
            x_loadings: matrix(&p)?,
            y_loadings: matrix(&c)?,
            x_scores: matrix(&t)?,
            coef: matrix(&b)?,
            n_comp: w.shape().get(1).copied().unwrap_or(0),
        };
        let (nf, no, a) = (model.n_features(), model.n_outputs(), model.n_comp);
        let consistent = model.x_weights.shape() == (nf, a)
            && model.x_loadings.shape() == (nf, a)
            && model.y_loadings.shape() == (no, a)
            && model.x_scores.ncols() == a
            && model.coef.shape() == (nf, no);
        if !consistent {
            return Err(bad("inconsistent shapes"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let tensors = self.to_tensors();
        checkpoint::save(&tensors.iter().collect::<Vec<_>>(), path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensors(checkpoint::load(path)?)
    }
}

pub fn predict(model: &PlsModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.predict(x)
}

/// How R² aggregates over a multi-output target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum R2Mode {
    /// One ratio of sums over every entry, centring each column.
    #[default]
    Pooled,
    /// Mean of per-row R² (rows with zero variance are skipped).
    PerImage,
}

/// Pooled multi-output R²: `1 − Σ(y − ŷ)² / Σ(y − ȳ_col)²`.
pub fn r2_score(y: &DMatrix<f64>, y_hat: &DMatrix<f64>) -> Result<f64> {
    r2_score_mode(y, y_hat, R2Mode::Pooled)
}

pub fn r2_score_mode(y: &DMatrix<f64>, y_hat: &DMatrix<f64>, mode: R2Mode) -> Result<f64> {
    if y.shape() != y_hat.shape() {
        return Err(Error::ShapeMismatch {
            expected: vec![y.nrows(), y.ncols()],
            actual: vec![y_hat.nrows(), y_hat.ncols()],
        });
    }
    if y.is_empty() {
        return Err(Error::R2Undefined);
    }
    match mode {
        R2Mode::Pooled => {
            let mean = column_means(y);
            let mut ss_res = 0.0;
            let mut ss_tot = 0.0;
            for r in 0..y.nrows() {
                for c in 0..y.ncols() {
                    let v = y[(r, c)];
                    ss_res += (v - y_hat[(r, c)]).powi(2);
                    ss_tot += (v - mean[c]).powi(2);
                }
            }
            if ss_tot == 0.0 {
                return Err(Error::R2Undefined);
            }
            Ok(1.0 - ss_res / ss_tot)
        }
        R2Mode::PerImage => {
            let mut total = 0.0;
            let mut count = 0usize;
            for r in 0..y.nrows() {
                let row = y.row(r);
                let mean = row.mean();
                let ss_tot: f64 = row.iter().map(|v| (v - mean).powi(2)).sum();
                if ss_tot == 0.0 {
                    continue;
                }
                let ss_res: f64 = row
                    .iter()
                    .zip(y_hat.row(r).iter())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                total += 1.0 - ss_res / ss_tot;
                count += 1;
            }
            if count == 0 {
                return Err(Error::R2Undefined);
            }
            Ok(total / count as f64)
        }
    }
}

/// Paired design/target matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct XY {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl XY {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::ShapeMismatch {
                expected: vec![x.nrows()],
                actual: vec![y.nrows()],
            });
        }
        Ok(Self { x, y })
    }

    pub fn from_pairs(pairs: &[(&RawImage, &BinaryMap)]) -> Result<Self> {
        let images: Vec<&RawImage> = pairs.iter().map(|p| p.0).collect();
        let maps: Vec<&BinaryMap> = pairs.iter().map(|p| p.1).collect();
        Self::new(design_matrix(&images)?, target_matrix(&maps)?)
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    /// Whether some row of `self` equals row `r` of `other` exactly (features and targets).
    pub fn contains_row(&self, other: &XY, r: usize) -> bool {
        (0..self.rows()).any(|i| self.x.row(i) == other.x.row(r) && self.y.row(i) == other.y.row(r))
    }

    /// Copy with extra rows appended.
    pub fn with_rows(&self, extra: &XY) -> Result<XY> {
        if extra.x.ncols() != self.x.ncols() || extra.y.ncols() != self.y.ncols() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.x.ncols(), self.y.ncols()],
                actual: vec![extra.x.ncols(), extra.y.ncols()],
            });
        }
        let stack = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
            m.rows_mut(0, a.nrows()).copy_from(a);
            m.rows_mut(a.nrows(), b.nrows()).copy_from(b);
            m
        };
        Ok(XY {
            x: stack(&self.x, &extra.x),
            y: stack(&self.y, &extra.y),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n_comp: usize,
    pub r2_train: f64,
    pub r2_val: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub chosen: usize,
}

impl SweepReport {
    pub fn chosen_row(&self) -> &SweepRow {
        self.rows
            .iter()
            .find(|r| r.n_comp == self.chosen)
            .expect("chosen is a scanned value")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_comp,r2_train,r2_val\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.10},{:.10}", r.n_comp, r.r2_train, r.r2_val);
        }
        out
    }
}

/// Scores `n_comp = 1..=max_comp` on train and validation and picks the
/// validation argmax (ties toward fewer components).
///
/// NIPALS extracts components sequentially, so one fit at `max_comp`
/// truncated to each `k` equals a separate fit with `k` components.
pub fn sweep_ncomp(train: &XY, val: &XY, max_comp: usize, mode: R2Mode) -> Result<SweepReport> {
    if max_comp == 0 {
        return Err(Error::InvalidArgument("max_comp must be >= 1".into()));
    }
    let full = fit_pls2(&train.x, &train.y, max_comp)?;
    let rows = (1..=max_comp)
        .into_par_iter()
        .map(|k| {
            let model = full.truncate(k)?;
            Ok(SweepRow {
                n_comp: k,
                r2_train: r2_score_mode(&train.y, &model.predict(&train.x)?, mode)?,
                r2_val: r2_score_mode(&val.y, &model.predict(&val.x)?, mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen = rows
        .iter()
        .fold(&rows[0], |best, r| if r.r2_val > best.r2_val { r } else { best })
        .n_comp;
    Ok(SweepReport { rows, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_hand_cases() {
        let y = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        let flat = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert_eq!(r2_score(&y, &flat).unwrap(), 0.0);
        assert!(matches!(r2_score(&flat, &y), Err(Error::R2Undefined)));
        assert!(r2_score(&y, &DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn r2_column_permutation_invariant() {
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, 4.0, 0.5]);
        let yh = DMatrix::from_row_slice(3, 2, &[1.5, 0.1, 1.0, 0.9, 3.0, 0.2]);
        let swap = |m: &DMatrix<f64>| {
            let mut s = m.clone();
            s.swap_columns(0, 1);
            s
        };
        let a = r2_score(&y, &yh).unwrap();
        let b = r2_score(&swap(&y), &swap(&yh)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn per_image_mode() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let yh = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        // second row has zero variance and is skipped
        assert_eq!(r2_score_mode(&y, &yh, R2Mode::PerImage).unwrap(), 1.0);
    }

    #[test]
    fn n_comp_range_and_degenerate() {
        let x = DMatrix::from_fn(5, 3, |r, c| (r * 3 + c) as f64 + (r * c) as f64 * 0.5);
        let y = DMatrix::from_fn(5, 1, |r, _| r as f64);
        assert!(fit_pls2(&x, &y, 0).is_err());
        assert!(fit_pls2(&x, &y, 4).is_err());
        let zeros = DMatrix::zeros(5, 3);
        assert!(matches!(fit_pls2(&zeros, &y, 1), Err(Error::Degenerate(_))));
        assert!(matches!(fit_pls2(&x, &DMatrix::zeros(5, 1), 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn centroid_predicts_mean() {
        let x = DMatrix::from_fn(6, 3, |r, c| ((r * 7 + c * 3) % 5) as f64 + c as f64);
        let y = DMatrix::from_fn(6, 2, |r, c| (r + c) as f64 * 0.3 + ((r * c) % 3) as f64);
        let model = fit_pls2(&x, &y, 2).unwrap();
        let centroid = DMatrix::from_row_slice(1, 3, model.x_mean.as_slice());
        let pred = model.predict(&centroid).unwrap();
        for (a, b) in pred.iter().zip(model.y_mean.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut zeroed = model.clone();
        zeroed.coef.fill(0.0);
        let pred = zeroed.predict(&x).unwrap();
        for r in 0..6 {
            assert_eq!(pred.row(r), model.y_mean);
        }
        assert!(model.predict(&DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let x = DMatrix::from_fn(8, 4, |r, c| ((r * 5 + c * 7) % 11) as f64);
        let y = DMatrix::from_fn(8, 3, |r, c| ((r + 2 * c) % 3) as f64);
        let model = fit_pls2(&x, &y, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pls.ckpt");
        model.save(&path).unwrap();
        assert_eq!(PlsModel::load(&path).unwrap(), model);
    }

    #[test]
    fn truncation_matches_direct_fit() {
        let x = DMatrix::from_fn(12, 5, |r, c| (((r + 1) * (c + 2)) % 7) as f64 + (r as f64).sin());
        let y = DMatrix::from_fn(12, 3, |r, c| ((r * (c + 1)) % 4) as f64);
        let full = fit_pls2(&x, &y, 4).unwrap();
        for k in 1..=4 {
            assert_eq!(full.truncate(k).unwrap(), fit_pls2(&x, &y, k).unwrap());
        }
    }
}
