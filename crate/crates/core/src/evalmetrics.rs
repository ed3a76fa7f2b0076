//! Confusion matrices (cloud = positive), per-image ROC curves, threshold
//! selection and precision/recall/F-score aggregation.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::BinaryMap;
use crate::pls::{r2_score_mode, PlsModel, R2Mode, XY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts with prediction rule `score ≥ thr`.
pub fn confusion(scores: &[f64], gt: &BinaryMap, thr: f64) -> Result<ConfusionMatrix> {
    if scores.len() != gt.labels().len() {
        return Err(Error::ShapeMismatch {
            expected: vec![gt.height(), gt.width()],
            actual: vec![scores.len()],
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&s, &truth) in scores.iter().zip(gt.labels()) {
        match (truth, s >= thr) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve ordered by decreasing threshold, bracketed by ±∞ sentinels.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: u64,
    pub negatives: u64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{:.10},{:.10}", fmt_threshold(p.threshold), p.fpr, p.tpr);
        }
        out
    }
}

/// Threshold rendered for CSV, with `inf`/`-inf` for the sentinels.
pub fn fmt_threshold(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{t:.10}")
    }
}

/// Trapezoid area under `(fpr, tpr)` points ordered by non-decreasing fpr.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Sweeps every distinct score as a threshold. Errors when `gt` is single-class.
pub fn roc_curve(scores: &[f64], gt: &BinaryMap) -> Result<RocCurve> {
    let curve = roc_curve_unchecked(scores, gt)?;
    if curve.positives == 0 || curve.negatives == 0 {
        return Err(Error::RocUndefined);
    }
    Ok(curve)
}

/// As [`roc_curve`] but accepts single-class ground truth (rates with an
/// empty denominator are 0).
pub fn roc_curve_unchecked(scores: &[f64], gt: &BinaryMap) -> Result<RocCurve> {
    if scores.len() != gt.labels().len() {
        return Err(Error::ShapeMismatch {
            expected: vec![gt.height(), gt.width()],
            actual: vec![scores.len()],
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let mut order: Vec<(f64, bool)> = scores.iter().copied().zip(gt.labels().iter().copied()).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = order.iter().filter(|o| o.1).count() as u64;
    let negatives = order.len() as u64 - positives;

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let thr = order[i].0;
        while i < order.len() && order[i].0 == thr {
            if order[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: thr,
            fpr: ratio(fp, negatives),
            tpr: ratio(tp, positives),
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: ratio(fp, negatives),
        tpr: ratio(tp, positives),
    });
    let auc = trapezoid_auc(&points);
    Ok(RocCurve {
        points,
        auc,
        positives,
        negatives,
    })
}

/// Operating-point criterion for choosing a per-image threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdCriterion {
    /// Maximize `tpr − fpr`.
    #[default]
    Youden,
    /// Minimize distance to `(fpr, tpr) = (0, 1)`.
    ClosestToCorner,
    /// Maximize the F-score.
    MaxFScore,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub thr: f64,
    pub criterion_value: f64,
}

/// Youden-optimal threshold; ties go to the larger threshold.
pub fn optimal_threshold(roc: &RocCurve) -> ThresholdChoice {
    select_threshold(roc, ThresholdCriterion::Youden)
}

pub fn select_threshold(roc: &RocCurve, criterion: ThresholdCriterion) -> ThresholdChoice {
    let score = |p: &RocPoint| -> f64 {
        match criterion {
            ThresholdCriterion::Youden => p.tpr - p.fpr,
            ThresholdCriterion::ClosestToCorner => -(p.fpr.powi(2) + (1.0 - p.tpr).powi(2)).sqrt(),
            ThresholdCriterion::MaxFScore => {
                let tp = p.tpr * roc.positives as f64;
                let fp = p.fpr * roc.negatives as f64;
                let fn_ = roc.positives as f64 - tp;
                f_from_counts(tp, fp, fn_)
            }
        }
    };
    // points run from the largest threshold down, so strict `>` keeps the larger one on ties
    let mut best = ThresholdChoice {
        thr: roc.points[0].threshold,
        criterion_value: score(&roc.points[0]),
    };
    for p in &roc.points[1..] {
        let v = score(p);
        if v > best.criterion_value {
            best = ThresholdChoice {
                thr: p.threshold,
                criterion_value: v,
            };
        }
    }
    if criterion == ThresholdCriterion::ClosestToCorner {
        best.criterion_value = -best.criterion_value;
    }
    best
}

fn f_from_counts(tp: f64, fp: f64, fn_: f64) -> f64 {
    let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Precision, recall and their harmonic mean; every 0/0 is 0.
pub fn prf(cm: &ConfusionMatrix) -> Prf {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf {
        precision,
        recall,
        f_score,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMetrics {
    pub index: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub thr: f64,
    pub auc: f64,
    /// Ground truth had a single class, so the ROC is undefined.
    pub degenerate: bool,
    pub roc: RocCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_image: Vec<ImageMetrics>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f_score: f64,
    pub r2_train: f64,
    pub r2_test: f64,
}

impl MetricsReport {
    pub fn degenerate_count(&self) -> usize {
        self.per_image.iter().filter(|m| m.degenerate).count()
    }
}

/// Metrics for one image's predicted scores against its ground truth.
pub fn evaluate_image(
    index: usize,
    scores: &[f64],
    gt: &BinaryMap,
    criterion: ThresholdCriterion,
) -> Result<ImageMetrics> {
    let roc = roc_curve_unchecked(scores, gt)?;
    let degenerate = roc.positives == 0 || roc.negatives == 0;
    let choice = select_threshold(&roc, criterion);
    let m = prf(&confusion(scores, gt, choice.thr)?);
    Ok(ImageMetrics {
        index,
        precision: m.precision,
        recall: m.recall,
        f_score: m.f_score,
        thr: choice.thr,
        auc: roc.auc,
        degenerate,
        roc,
    })
}

/// Per-image thresholds chosen on each test image's own ground truth, then
/// unweighted means; R² on the model's training set and on the test set.
pub fn evaluate_model(
    model: &PlsModel,
    train: &XY,
    test: &XY,
    test_maps: &[&BinaryMap],
    criterion: ThresholdCriterion,
    r2_mode: R2Mode,
) -> Result<MetricsReport> {
    if test_maps.len() != test.rows() || test.rows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "test set has {} rows but {} maps",
            test.rows(),
            test_maps.len()
        )));
    }
    let pred_test = model.predict(&test.x)?;
    let r2_train = r2_score_mode(&train.y, &model.predict(&train.x)?, r2_mode)?;
    let r2_test = r2_score_mode(&test.y, &pred_test, r2_mode)?;
    let per_image = (0..test.rows())
        .into_par_iter()
        .map(|i| {
            let scores: Vec<f64> = pred_test.row(i).iter().copied().collect();
            evaluate_image(i, &scores, test_maps[i], criterion)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_image.len() as f64;
    Ok(MetricsReport {
        mean_precision: per_image.iter().map(|m| m.precision).sum::<f64>() / n,
        mean_recall: per_image.iter().map(|m| m.recall).sum::<f64>() / n,
        mean_f_score: per_image.iter().map(|m| m.f_score).sum::<f64>() / n,
        per_image,
        r2_train,
        r2_test,
    })
}
