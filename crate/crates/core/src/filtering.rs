//! Favorable-candidate filter: a generated pair is kept only if adding it to
//! the training set does not lower the validation R².

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pls::{fit_pls2, r2_score_mode, R2Mode, XY};
use crate::pseudolabel::{Candidate, Verdict};

/// How candidates are added while filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Each candidate is judged against the fixed base training set.
    #[default]
    Independent,
    /// Accepted candidates accumulate; each later candidate is refit on the
    /// grown set but still compared against the original baseline.
    Sequential,
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::Independent => "independent",
            FilterMode::Sequential => "sequential",
        })
    }
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(FilterMode::Independent),
            "sequential" => Ok(FilterMode::Sequential),
            other => Err(Error::InvalidArgument(format!("unknown filter mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlsConfig {
    pub n_comp: usize,
    pub r2_mode: R2Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub candidate_id: String,
    pub r2_val_with: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub baseline_r2_val: f64,
    pub decisions: Vec<Decision>,
    pub accepted_count: usize,
    /// Rows actually appended; smaller than `accepted_count` only when an
    /// accepted pair was already in the training set.
    pub added_count: usize,
    pub mode: FilterMode,
}

impl FilterReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate_id,r2_val_with,verdict,baseline_r2_val,mode\n");
        for d in &self.decisions {
            let verdict = match d.verdict {
                Verdict::Favorable => "favorable",
                Verdict::Unfavorable => "unfavorable",
                Verdict::Unset => "unset",
            };
            let _ = writeln!(
                out,
                "{},{:.10},{},{:.10},{}",
                d.candidate_id, d.r2_val_with, verdict, self.baseline_r2_val, self.mode
            );
        }
        out
    }
}

/// Stable identifier derived from the candidate's provenance.
pub fn candidate_id(c: &Candidate) -> String {
    format!("{}-{:04}", c.provenance.generator_id, c.provenance.index)
}

fn check_nonempty(train: &XY, val: &XY) -> Result<()> {
    if train.rows() == 0 || val.rows() == 0 {
        return Err(Error::InvalidArgument(
            "filtering needs nonempty training and validation sets".into(),
        ));
    }
    Ok(())
}

/// Validation R² of a fit on `train` at the configured `n_comp`.
pub fn baseline(train: &XY, val: &XY, cfg: &PlsConfig) -> Result<f64> {
    check_nonempty(train, val)?;
    let model = fit_pls2(&train.x, &train.y, cfg.n_comp)?;
    r2_score_mode(&val.y, &model.predict(&val.x)?, cfg.r2_mode)
}

fn candidate_xy(c: &Candidate) -> Result<XY> {
    XY::from_pairs(&[(&c.image, &c.map)])
}

/// `set ∪ {c}` with set semantics: a pair already present is not added twice.
fn union_with(set: &XY, c: &Candidate) -> Result<XY> {
    let row = candidate_xy(c)?;
    if set.contains_row(&row, 0) {
        Ok(set.clone())
    } else {
        set.with_rows(&row)
    }
}

/// `train ∪ accepted`, in order, with set semantics.
pub fn augment_train<'a>(train: &XY, accepted: impl IntoIterator<Item = &'a Candidate>) -> Result<XY> {
    accepted.into_iter().try_fold(train.clone(), |set, c| union_with(&set, c))
}

/// Validation R² after refitting on `train ∪ {c}`.
pub fn r2_val_with(train: &XY, val: &XY, c: &Candidate, cfg: &PlsConfig) -> Result<f64> {
    check_nonempty(train, val)?;
    baseline(&union_with(train, c)?, val, cfg)
}

/// Refits with the candidate and records the verdict: favorable iff the
/// validation R² does not drop below `baseline_r2`.
pub fn evaluate_candidate(
    train: &XY,
    val: &XY,
    c: &Candidate,
    cfg: &PlsConfig,
    baseline_r2: f64,
) -> Result<Decision> {
    let r2 = r2_val_with(train, val, c, cfg)?;
    Ok(Decision {
        candidate_id: candidate_id(c),
        r2_val_with: r2,
        verdict: if r2 >= baseline_r2 {
            Verdict::Favorable
        } else {
            Verdict::Unfavorable
        },
    })
}

/// Judges every candidate and returns the report together with the training
/// set extended by the favorable ones (in input order, pairs already present
/// skipped). Verdicts are also written back onto the candidates.
pub fn filter_candidates(
    train: &XY,
    val: &XY,
    candidates: &mut [Candidate],
    cfg: &PlsConfig,
    mode: FilterMode,
) -> Result<(FilterReport, XY)> {
    let base = baseline(train, val, cfg)?;
    let decisions = match mode {
        FilterMode::Independent => candidates
            .par_iter()
            .map(|c| evaluate_candidate(train, val, c, cfg, base))
            .collect::<Result<Vec<_>>>()?,
        FilterMode::Sequential => {
            let mut grown = train.clone();
            let mut out = Vec::with_capacity(candidates.len());
            for c in candidates.iter() {
                let d = evaluate_candidate(&grown, val, c, cfg, base)?;
                if d.verdict == Verdict::Favorable {
                    grown = union_with(&grown, c)?;
                }
                out.push(d);
            }
            out
        }
    };

    for (c, d) in candidates.iter_mut().zip(&decisions) {
        c.verdict = d.verdict;
        c.r2_val_with = Some(d.r2_val_with);
    }
    let augmented = augment_train(train, candidates.iter().filter(|c| c.verdict == Verdict::Favorable))?;
    let accepted_count = decisions.iter().filter(|d| d.verdict == Verdict::Favorable).count();
    Ok((
        FilterReport {
            baseline_r2_val: base,
            decisions,
            accepted_count,
            added_count: augmented.rows() - train.rows(),
            mode,
        },
        augmented,
    ))
}
