//! Stage orchestration with on-disk artifacts and hash-based staleness.
//!
//! Each stage declares the config keys it reads, the upstream stages whose
//! artifacts it consumes and the paths it writes. Its fingerprint hashes
//! those keys together with the recorded hashes of every upstream artifact;
//! a stage whose fingerprint and outputs are unchanged is skipped.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use skyaug::augment::{augment_fold, normalize};
use skyaug::evalmetrics::{evaluate_model, fmt_threshold, MetricsReport};
use skyaug::filtering::{augment_train, candidate_id, filter_candidates, PlsConfig};
use skyaug::gan::{self, train::write_loss_history, train_gan};
use skyaug::imageio::{
    downsample_image, downsample_map, extract_rb, load_image_file, load_map_any, load_map_file,
    load_rgb_file, read_manifest, save_image_file, save_map_file, split_dataset, synth_dataset,
    write_manifest, BinaryMap, ManifestRecord, RawImage, SplitTag,
};
use skyaug::pls::{fit_pls2, sweep_ncomp, PlsModel, XY};
use skyaug::pseudolabel::{pseudo_label, Candidate, Provenance, Verdict};

use crate::config::{criterion_name, DatasetSource, PipelineConfig};
use crate::error::{io_err, CliError, Result};
use crate::manifest::{list_files, sha256_file, sha256_str, RunManifest, StageRecord};

pub const GENERATOR_ID: &str = "gan";
pub const CASES: [&str; 2] = ["without_augmentation", "after_augmentation"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Prepare,
    TrainGan,
    SampleGan,
    Pseudolabel,
    TunePls,
    Filter,
    TrainFinal,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Prepare,
        Stage::TrainGan,
        Stage::SampleGan,
        Stage::Pseudolabel,
        Stage::TunePls,
        Stage::Filter,
        Stage::TrainFinal,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::TrainGan => "train-gan",
            Stage::SampleGan => "sample-gan",
            Stage::Pseudolabel => "pseudolabel",
            Stage::TunePls => "tune-pls",
            Stage::Filter => "filter",
            Stage::TrainFinal => "train-final",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    fn deps(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Prepare => &[],
            TrainGan => &[Prepare],
            SampleGan => &[TrainGan],
            Pseudolabel => &[SampleGan],
            TunePls => &[Prepare],
            Filter => &[Prepare, SampleGan, Pseudolabel, TunePls],
            TrainFinal => &[Prepare, SampleGan, Pseudolabel, TunePls, Filter],
            Evaluate => &[Prepare, SampleGan, Pseudolabel, TunePls, Filter, TrainFinal],
            Report => &[TrainGan, TunePls, Filter, Evaluate],
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Stage::Prepare => &["dataset", "synthetic_count", "synthetic_seed", "side", "split_seed"],
            Stage::TrainGan => &[
                "augment_dedupe",
                "gan_epochs",
                "gan_batch_size",
                "gan_learning_rate",
                "gan_latent_dim",
                "gan_wide_channels",
                "gan_narrow_channels",
                "gan_seed",
            ],
            Stage::SampleGan => &["candidate_count", "candidate_seed"],
            Stage::Pseudolabel => &[
                "cluster_max_iters",
                "cluster_tol",
                "invert_cloud_rule",
                "smooth_radius",
                "smooth_max_passes",
            ],
            Stage::TunePls => &["pls_max_comp", "r2_mode"],
            Stage::Filter => &["filter_mode", "r2_mode"],
            Stage::TrainFinal => &[],
            Stage::Evaluate => &["threshold_criterion", "r2_mode"],
            Stage::Report => &[],
        }
    }

    /// Paths (files or directories, relative to the run directory) the stage owns.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Prepare => &["data", "split.csv"],
            Stage::TrainGan => &["gan"],
            Stage::SampleGan => &["candidates/images", "candidates/samples.csv"],
            Stage::Pseudolabel => &["candidates/maps", "candidates/pseudolabels.csv"],
            Stage::TunePls => &["pls"],
            Stage::Filter => &["filter"],
            Stage::TrainFinal => &["final"],
            Stage::Evaluate => &["eval"],
            Stage::Report => &["report"],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub force: bool,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, force: bool) -> Result<Self> {
        cfg.validate()?;
        let dir = cfg.output_dir.clone();
        mkdir(&dir)?;
        let manifest = RunManifest::load_or_default(&dir)?;
        Ok(Self {
            cfg,
            dir,
            manifest,
            force,
        })
    }

    /// Runs every stage in order.
    pub fn run_all(&mut self) -> Result<Vec<(Stage, Outcome)>> {
        Stage::ALL.into_iter().map(|s| Ok((s, self.run(s)?))).collect()
    }

    /// Runs one stage if its inputs, config or outputs changed (or `force`).
    pub fn run(&mut self, stage: Stage) -> Result<Outcome> {
        let fingerprint = self.fingerprint(stage)?;
        if !self.force && self.is_current(stage, &fingerprint)? {
            return Ok(Outcome::UpToDate);
        }
        for out in stage.outputs() {
            let p = self.dir.join(out);
            if p.is_dir() {
                fs::remove_dir_all(&p).map_err(|e| io_err(&p, e))?;
            } else if p.exists() {
                fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
            }
        }
        let start = Instant::now();
        match stage {
            Stage::Prepare => self.prepare()?,
            Stage::TrainGan => self.train_gan()?,
            Stage::SampleGan => self.sample_gan()?,
            Stage::Pseudolabel => self.pseudolabel()?,
            Stage::TunePls => self.tune_pls()?,
            Stage::Filter => self.filter()?,
            Stage::TrainFinal => self.train_final()?,
            Stage::Evaluate => self.evaluate()?,
            Stage::Report => self.report()?,
        }
        let mut outputs = std::collections::BTreeMap::new();
        for out in stage.outputs() {
            for rel in list_files(&self.dir, out)? {
                let hash = sha256_file(&self.dir.join(&rel))?;
                outputs.insert(rel, hash);
            }
        }
        self.manifest.stages.insert(
            stage.name().to_string(),
            StageRecord {
                fingerprint,
                wall_time_secs: start.elapsed().as_secs_f64(),
                outputs,
            },
        );
        self.manifest.library_version = skyaug::VERSION.to_string();
        self.manifest.config = self.cfg.snapshot();
        self.manifest.seeds = [
            ("split_seed", self.cfg.split_seed),
            ("synthetic_seed", self.cfg.synthetic_seed),
            ("gan_seed", self.cfg.gan.seed),
            ("candidate_seed", self.cfg.candidate_seed),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        self.manifest.save(&self.dir)?;
        Ok(Outcome::Ran)
    }

    fn fingerprint(&self, stage: Stage) -> Result<String> {
        let snap = self.cfg.snapshot();
        let mut text = format!("stage {}\n", stage.name());
        for k in stage.keys() {
            text.push_str(&format!("{k}={}\n", snap[*k]));
        }
        for dep in stage.deps() {
            let rec = self.manifest.stages.get(dep.name()).ok_or(CliError::MissingArtifact {
                path: self.dir.join(dep.outputs()[0]),
                stage: dep.name(),
            })?;
            for (rel, hash) in &rec.outputs {
                let p = self.dir.join(rel);
                if !p.exists() {
                    return Err(CliError::MissingArtifact {
                        path: p,
                        stage: dep.name(),
                    });
                }
                if &sha256_file(&p)? != hash {
                    return Err(CliError::StaleArtifact {
                        path: p,
                        stage: dep.name(),
                    });
                }
                text.push_str(&format!("{rel} {hash}\n"));
            }
        }
        if stage == Stage::Prepare {
            if let DatasetSource::Path(src) = &self.cfg.dataset {
                for f in source_files(src)? {
                    text.push_str(&format!("{} {}\n", f.display(), sha256_file(&f)?));
                }
            }
        }
        Ok(sha256_str(&text))
    }

    fn is_current(&self, stage: Stage, fingerprint: &str) -> Result<bool> {
        let Some(rec) = self.manifest.stages.get(stage.name()) else {
            return Ok(false);
        };
        if rec.fingerprint != fingerprint {
            return Ok(false);
        }
        for (rel, hash) in &rec.outputs {
            let p = self.dir.join(rel);
            if !p.exists() || &sha256_file(&p)? != hash {
                return Ok(false);
            }
        }
        Ok(true)
    }

    // -- stages --------------------------------------------------------------

    fn prepare(&mut self) -> Result<()> {
        let side = self.cfg.side;
        let (items, given_split) = match &self.cfg.dataset {
            DatasetSource::Synthetic => {
                let data = synth_dataset(self.cfg.synthetic_count, side, self.cfg.synthetic_seed)?;
                let items: Vec<_> = data
                    .into_iter()
                    .enumerate()
                    .map(|(i, (img, map))| (format!("img_{i:03}"), img, map))
                    .collect();
                (items, None)
            }
            DatasetSource::Path(src) => load_external(src, side)?,
        };
        let tags = match given_split {
            Some(tags) => tags,
            None => split_dataset(items.len(), self.cfg.split_seed)?.tags(),
        };
        mkdir(&self.dir.join("data/images"))?;
        mkdir(&self.dir.join("data/maps"))?;
        let mut records = Vec::with_capacity(items.len());
        for ((id, img, map), tag) in items.iter().zip(tags) {
            let image_path = PathBuf::from(format!("data/images/{id}.pgm"));
            let map_path = PathBuf::from(format!("data/maps/{id}.pgm"));
            save_image_file(img, self.dir.join(&image_path))?;
            save_map_file(map, self.dir.join(&map_path))?;
            records.push(ManifestRecord {
                image_path,
                map_path,
                split: tag,
            });
        }
        write_manifest(&records, self.dir.join("split.csv"))?;
        Ok(())
    }

    fn train_gan(&mut self) -> Result<()> {
        let data = self.load_prepared()?;
        let images: Vec<_> = data
            .train
            .iter()
            .flat_map(|s| augment_fold(&s.image, self.cfg.augment_dedupe))
            .map(|img| normalize(&img))
            .collect();
        let trained = train_gan(&images, &self.cfg.gan_config())?;
        let gdir = self.dir.join("gan");
        mkdir(&gdir)?;
        gan::save_generator(&trained.generator, gdir.join("generator.ckpt"))?;
        gan::save_discriminator(&trained.discriminator, gdir.join("discriminator.ckpt"))?;
        write_loss_history(&trained.history, gdir.join("loss.csv"))?;
        Ok(())
    }

    fn sample_gan(&mut self) -> Result<()> {
        let generator = gan::load_generator(self.dir.join("gan/generator.ckpt"))?;
        let images = gan::sample(&generator, self.cfg.candidate_count, self.cfg.candidate_seed)?;
        let idir = self.dir.join("candidates/images");
        mkdir(&idir)?;
        let mut csv = String::from("candidate_id,latent_seed\n");
        for (i, img) in images.iter().enumerate() {
            let id = format!("{GENERATOR_ID}-{i:04}");
            save_image_file(img, idir.join(format!("{id}.pgm")))?;
            csv.push_str(&format!("{id},{}\n", self.cfg.candidate_seed.wrapping_add(i as u64)));
        }
        write(&self.dir.join("candidates/samples.csv"), &csv)
    }

    fn pseudolabel(&mut self) -> Result<()> {
        let mdir = self.dir.join("candidates/maps");
        mkdir(&mdir)?;
        let mut csv = String::from("candidate_id,latent_seed,cloud_fraction\n");
        for (id, seed) in self.sample_list()? {
            let img = load_image_file(self.dir.join(format!("candidates/images/{id}.pgm")))?;
            let map = pseudo_label(&img, &self.cfg.cluster, &self.cfg.smooth);
            save_map_file(&map, mdir.join(format!("{id}.pgm")))?;
            let frac = map.cloud_count() as f64 / map.labels().len() as f64;
            csv.push_str(&format!("{id},{seed},{frac:.10}\n"));
        }
        write(&self.dir.join("candidates/pseudolabels.csv"), &csv)
    }

    fn tune_pls(&mut self) -> Result<()> {
        let data = self.load_prepared()?;
        let report = sweep_ncomp(&xy(&data.train)?, &xy(&data.val)?, self.cfg.pls_max_comp, self.cfg.r2_mode)?;
        write(&self.dir.join("pls/sweep.csv"), &report.to_csv())?;
        write(&self.dir.join("pls/n_comp.txt"), &format!("{}\n", report.chosen))
    }

    fn filter(&mut self) -> Result<()> {
        let data = self.load_prepared()?;
        let mut candidates = self.load_candidates()?;
        let cfg = self.pls_config()?;
        let (report, _) = filter_candidates(
            &xy(&data.train)?,
            &xy(&data.val)?,
            &mut candidates,
            &cfg,
            self.cfg.filter_mode,
        )?;
        write(&self.dir.join("filter/filter.csv"), &report.to_csv())
    }

    fn train_final(&mut self) -> Result<()> {
        let data = self.load_prepared()?;
        let n_comp = self.pls_config()?.n_comp;
        let (base, augmented) = self.training_sets(&data)?;
        mkdir(&self.dir.join("final"))?;
        for (case, set) in CASES.iter().zip([&base, &augmented]) {
            let model = fit_pls2(&set.x, &set.y, n_comp)?;
            model.save(self.dir.join(format!("final/{case}.ckpt")))?;
        }
        Ok(())
    }

    fn evaluate(&mut self) -> Result<()> {
        let data = self.load_prepared()?;
        let (base, augmented) = self.training_sets(&data)?;
        let test = xy(&data.test)?;
        let test_maps: Vec<&BinaryMap> = data.test.iter().map(|s| &s.map).collect();
        let mut reports = Vec::new();
        for (case, train) in CASES.iter().zip([&base, &augmented]) {
            let model = PlsModel::load(self.dir.join(format!("final/{case}.ckpt")))?;
            let r = evaluate_model(
                &model,
                train,
                &test,
                &test_maps,
                self.cfg.threshold_criterion,
                self.cfg.r2_mode,
            )?;
            for m in &r.per_image {
                let id = &data.test[m.index].id;
                write(&self.dir.join(format!("eval/roc/{case}/{id}.csv")), &m.roc.to_csv())?;
            }
            reports.push(r);
        }

        let mut comparison = String::from("case,r2_train,r2_test,precision,recall,f_score\n");
        let mut per_image = String::from("case,image_id,precision,recall,f_score,thr,auc,degenerate\n");
        for (case, r) in CASES.iter().zip(&reports) {
            comparison.push_str(&format!(
                "{case},{:.10},{:.10},{:.10},{:.10},{:.10}\n",
                r.r2_train, r.r2_test, r.mean_precision, r.mean_recall, r.mean_f_score
            ));
            for m in &r.per_image {
                per_image.push_str(&format!(
                    "{case},{},{:.10},{:.10},{:.10},{},{:.10},{}\n",
                    data.test[m.index].id,
                    m.precision,
                    m.recall,
                    m.f_score,
                    fmt_threshold(m.thr),
                    m.auc,
                    m.degenerate
                ));
            }
        }
        write(&self.dir.join("eval/comparison.csv"), &comparison)?;
        write(&self.dir.join("eval/per_image.csv"), &per_image)?;

        let filter = self.filter_rows()?;
        let summary = Summary {
            without_augmentation: CaseSummary::from(&reports[0]),
            after_augmentation: CaseSummary::from(&reports[1]),
            comparison: ComparisonSummary {
                f_score_improved: reports[1].mean_f_score > reports[0].mean_f_score,
                r2_test_improved: reports[1].r2_test > reports[0].r2_test,
                n_comp: self.pls_config()?.n_comp,
                candidates: filter.len(),
                accepted_candidates: filter.iter().filter(|(_, v)| *v == Verdict::Favorable).count(),
                augmented_train_rows: augmented.rows(),
                base_train_rows: base.rows(),
                test_images: data.test.len(),
                threshold_criterion: criterion_name(self.cfg.threshold_criterion).to_string(),
                note: "Each test image's threshold is chosen on its own ground truth, so \
                       precision/recall/F-score are optimistic by construction of the protocol."
                    .to_string(),
            },
        };
        let text = toml::to_string(&summary).map_err(|e| CliError::Manifest(e.to_string()))?;
        write(&self.dir.join("eval/summary.toml"), &text)
    }

    fn report(&mut self) -> Result<()> {
        let rdir = self.dir.join("report");
        let copies = [
            ("gan/loss.csv", "gan_loss.csv"),
            ("pls/sweep.csv", "ncomp_sweep.csv"),
            ("filter/filter.csv", "filter_decisions.csv"),
            ("eval/comparison.csv", "comparison.csv"),
            ("eval/per_image.csv", "per_image.csv"),
            ("eval/summary.toml", "summary.toml"),
        ];
        mkdir(&rdir)?;
        for (src, dst) in copies {
            let (s, d) = (self.dir.join(src), rdir.join(dst));
            fs::copy(&s, &d).map_err(|e| io_err(&s, e))?;
        }
        for rel in list_files(&self.dir, "eval/roc")? {
            let dst = rdir.join(rel.trim_start_matches("eval/"));
            if let Some(parent) = dst.parent() {
                mkdir(parent)?;
            }
            let src = self.dir.join(&rel);
            fs::copy(&src, &dst).map_err(|e| io_err(&src, e))?;
        }
        Ok(())
    }

    // -- artifact readers ----------------------------------------------------

    pub fn load_prepared(&self) -> Result<Prepared> {
        let mut out = Prepared::default();
        for rec in read_manifest(self.dir.join("split.csv"))? {
            let id = rec
                .image_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let sample = Sample {
                id,
                image: load_image_file(&rec.image_path)?,
                map: load_map_file(&rec.map_path)?,
            };
            match rec.split {
                SplitTag::Train => out.train.push(sample),
                SplitTag::Val => out.val.push(sample),
                SplitTag::Test => out.test.push(sample),
            }
        }
        Ok(out)
    }

    fn sample_list(&self) -> Result<Vec<(String, u64)>> {
        let path = self.dir.join("candidates/samples.csv");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        text.lines()
            .skip(1)
            .map(|line| {
                let (id, seed) = line.split_once(',').ok_or_else(|| malformed(&path, line))?;
                Ok((id.to_string(), seed.parse().map_err(|_| malformed(&path, line))?))
            })
            .collect()
    }

    pub fn load_candidates(&self) -> Result<Vec<Candidate>> {
        self.sample_list()?
            .into_iter()
            .enumerate()
            .map(|(index, (id, latent_seed))| {
                let image = load_image_file(self.dir.join(format!("candidates/images/{id}.pgm")))?;
                let map = load_map_file(self.dir.join(format!("candidates/maps/{id}.pgm")))?;
                Ok(Candidate::new(
                    image,
                    map,
                    Provenance {
                        generator_id: GENERATOR_ID.to_string(),
                        latent_seed,
                        index,
                    },
                ))
            })
            .collect()
    }

    fn pls_config(&self) -> Result<PlsConfig> {
        let path = self.dir.join("pls/n_comp.txt");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        Ok(PlsConfig {
            n_comp: text.trim().parse().map_err(|_| malformed(&path, text.trim()))?,
            r2_mode: self.cfg.r2_mode,
        })
    }

    /// `(candidate_id, verdict)` rows of the filter report.
    pub fn filter_rows(&self) -> Result<Vec<(String, Verdict)>> {
        let path = self.dir.join("filter/filter.csv");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        text.lines()
            .skip(1)
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                let verdict = match fields.get(2) {
                    Some(&"favorable") => Verdict::Favorable,
                    Some(&"unfavorable") => Verdict::Unfavorable,
                    _ => return Err(malformed(&path, line)),
                };
                Ok((fields[0].to_string(), verdict))
            })
            .collect()
    }

    /// Base training set and the set augmented with every favorable candidate.
    fn training_sets(&self, data: &Prepared) -> Result<(XY, XY)> {
        let base = xy(&data.train)?;
        let favorable: std::collections::BTreeSet<String> = self
            .filter_rows()?
            .into_iter()
            .filter(|(_, v)| *v == Verdict::Favorable)
            .map(|(id, _)| id)
            .collect();
        let candidates = self.load_candidates()?;
        let augmented = augment_train(
            &base,
            candidates.iter().filter(|c| favorable.contains(&candidate_id(c))),
        )?;
        Ok((base, augmented))
    }
}

fn malformed(path: &Path, line: &str) -> CliError {
    CliError::Data(skyaug::Error::Malformed {
        path: path.to_path_buf(),
        reason: format!("unexpected line {line:?}"),
    })
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub image: RawImage,
    pub map: BinaryMap,
}

#[derive(Debug, Clone, Default)]
pub struct Prepared {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

pub fn xy(samples: &[Sample]) -> Result<XY> {
    let pairs: Vec<_> = samples.iter().map(|s| (&s.image, &s.map)).collect();
    Ok(XY::from_pairs(&pairs)?)
}

#[derive(Serialize)]
struct CaseSummary {
    r2_train: f64,
    r2_test: f64,
    precision: f64,
    recall: f64,
    f_score: f64,
    degenerate_images: usize,
}

impl From<&MetricsReport> for CaseSummary {
    fn from(r: &MetricsReport) -> Self {
        Self {
            r2_train: r.r2_train,
            r2_test: r.r2_test,
            precision: r.mean_precision,
            recall: r.mean_recall,
            f_score: r.mean_f_score,
            degenerate_images: r.degenerate_count(),
        }
    }
}

#[derive(Serialize)]
struct ComparisonSummary {
    f_score_improved: bool,
    r2_test_improved: bool,
    n_comp: usize,
    candidates: usize,
    accepted_candidates: usize,
    base_train_rows: usize,
    augmented_train_rows: usize,
    test_images: usize,
    threshold_criterion: String,
    note: String,
}

#[derive(Serialize)]
struct Summary {
    without_augmentation: CaseSummary,
    after_augmentation: CaseSummary,
    comparison: ComparisonSummary,
}

// -- external datasets -------------------------------------------------------

const IMAGE_EXTS: [&str; 7] = ["jpg", "jpeg", "png", "bmp", "tif", "tiff", "pgm"];

fn has_image_ext(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTS.contains(&e.to_ascii_lowercase().as_str()))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && has_image_ext(p))
        .collect();
    v.sort();
    Ok(v)
}

/// Every source file the external dataset consists of.
fn source_files(src: &Path) -> Result<Vec<PathBuf>> {
    if src.is_dir() {
        let mut files = sorted_entries(&src.join("images"))?;
        files.extend(sorted_entries(&src.join("GTmaps"))?);
        Ok(files)
    } else {
        let mut files = vec![src.to_path_buf()];
        for r in read_manifest(src)? {
            files.push(r.image_path);
            files.push(r.map_path);
        }
        Ok(files)
    }
}

/// Greyscale PGMs are taken as already-extracted R−B images; anything else
/// is read as colour and converted.
fn load_rb(path: &Path) -> Result<RawImage> {
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        Ok(load_image_file(path)?)
    } else {
        Ok(extract_rb(&load_rgb_file(path)?))
    }
}

type External = (Vec<(String, RawImage, BinaryMap)>, Option<Vec<SplitTag>>);

fn load_external(src: &Path, side: usize) -> Result<External> {
    if !src.exists() {
        return Err(io_err(src, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let mut items = Vec::new();
    let load = |img: &Path, map: &Path| -> Result<(RawImage, BinaryMap)> {
        Ok((
            downsample_image(&load_rb(img)?, side)?,
            downsample_map(&load_map_any(map)?, side)?,
        ))
    };
    if src.is_dir() {
        let maps = sorted_entries(&src.join("GTmaps"))?;
        for img_path in sorted_entries(&src.join("images"))? {
            let stem = img_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let map_path = maps
                .iter()
                .find(|m| {
                    let ms = m.file_stem().unwrap_or_default().to_string_lossy();
                    ms == stem || ms == format!("{stem}_GT")
                })
                .ok_or_else(|| {
                    CliError::Data(skyaug::Error::InvalidArgument(format!(
                        "no ground-truth map for {}",
                        img_path.display()
                    )))
                })?;
            let (img, map) = load(&img_path, map_path)?;
            items.push((stem, img, map));
        }
        if items.is_empty() {
            return Err(CliError::Data(skyaug::Error::InvalidArgument(format!(
                "no images found under {}",
                src.join("images").display()
            ))));
        }
        Ok((items, None))
    } else {
        let records = read_manifest(src)?;
        let mut tags = Vec::new();
        for (i, r) in records.iter().enumerate() {
            let stem = r.image_path.file_stem().unwrap_or_default().to_string_lossy();
            let (img, map) = load(&r.image_path, &r.map_path)?;
            items.push((format!("{i:04}_{stem}"), img, map));
            tags.push(r.split);
        }
        Ok((items, Some(tags)))
    }
}
