//! Stage orchestration over a deterministic output tree.
//!
//! ```text
//! <out>/manifest.json                 resolved run config
//! <out>/corpus/<split>.jsonl          normalized ingested splits
//! <out>/corpus/train.augmented.jsonl
//! <out>/corpus/stats.{json,txt}
//! <out>/augmentation/audit.jsonl      one record per backtranslation
//! <out>/augmentation/summary.json
//! <out>/models/<id>.json
//! <out>/predictions/<id>.jsonl        evaluation split
//! <out>/predictions/test/<id>.jsonl   test split, when configured
//! <out>/reports/metrics.json, report.txt, confusion.json, <metric>.svg
//! ```
//!
//! Every stage reads what earlier stages wrote, so stages can run one at a
//! time. Identical configs produce byte-identical trees.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::augmentation::{
    augment, write_audit, AugmentationConfig, AugmentationSummary, IdentityTranslator, PerturbTranslator, Translator,
};
use crate::classifiers::{self, MockBackend, TrainedModel, TrainingBackend};
use crate::config::{EmbedderKind, RunConfig, TrainerKind, TranslatorKind};
use crate::corpus::{self, render_stats_table, stats, Corpus, Format, Label, Split};
use crate::embeddings::{CachedEmbedder, EmbeddingProvider, HashEmbedder};
use crate::ensemble::ensemble_from;
use crate::error::{Error, Result};
use crate::metrics::{self, parse_rows, render_report, Column, ConfusionMatrix, Report};
use crate::predictions::{load_predictions_as, save_predictions, PredictionSet};
use crate::remote::{RemoteEmbedder, RemoteTrainer, RemoteTranslator};

pub const ENSEMBLE_FILE_STEM: &str = "ensemble";

/// Paths inside an output directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn corpus(&self, split: Split) -> PathBuf {
        self.root.join("corpus").join(format!("{}.jsonl", split.as_str()))
    }

    pub fn augmented(&self) -> PathBuf {
        self.root.join("corpus/train.augmented.jsonl")
    }

    pub fn stats_json(&self) -> PathBuf {
        self.root.join("corpus/stats.json")
    }

    pub fn stats_text(&self) -> PathBuf {
        self.root.join("corpus/stats.txt")
    }

    pub fn audit(&self, split: Split) -> PathBuf {
        match split {
            Split::Train => self.root.join("augmentation/audit.jsonl"),
            other => self.root.join(format!("augmentation/audit.{}.jsonl", other.as_str())),
        }
    }

    pub fn augmentation_summary(&self) -> PathBuf {
        self.root.join("augmentation/summary.json")
    }

    pub fn model(&self, id: &str) -> PathBuf {
        self.root.join("models").join(format!("{id}.json"))
    }

    pub fn predictions_dir(&self, split: Split) -> PathBuf {
        match split {
            Split::Test => self.root.join("predictions/test"),
            _ => self.root.join("predictions"),
        }
    }

    pub fn predictions(&self, split: Split, stem: &str) -> PathBuf {
        self.predictions_dir(split).join(format!("{stem}.jsonl"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn metrics(&self) -> PathBuf {
        self.reports_dir().join("metrics.json")
    }
}

/// Embedding provider, optionally wrapped in a persistent cache.
pub enum Embedder {
    Plain(Box<dyn EmbeddingProvider>),
    Cached(CachedEmbedder),
}

impl Embedder {
    pub fn provider(&self) -> &dyn EmbeddingProvider {
        match self {
            Embedder::Plain(p) => p.as_ref(),
            Embedder::Cached(c) => c,
        }
    }

    pub fn flush(&self) -> Result<()> {
        match self {
            Embedder::Plain(_) => Ok(()),
            Embedder::Cached(c) => c.flush(),
        }
    }
}

fn endpoint(cfg: &RunConfig, what: &str) -> Result<String> {
    cfg.backends
        .endpoint
        .clone()
        .ok_or_else(|| Error::validation(format!("remote {what} needs backends.endpoint")))
}

pub fn build_translator(cfg: &RunConfig) -> Result<Box<dyn Translator>> {
    Ok(match cfg.backends.translator {
        TranslatorKind::Identity => Box::new(IdentityTranslator),
        TranslatorKind::Perturb => Box::new(PerturbTranslator::new(cfg.seed, cfg.augmentation.pivot.clone())),
        TranslatorKind::Remote => Box::new(RemoteTranslator::new(
            &endpoint(cfg, "translator")?,
            cfg.backends.translator_checkpoint.clone().unwrap_or_default(),
        )?),
    })
}

pub fn build_embedder(cfg: &RunConfig) -> Result<Embedder> {
    let b = &cfg.backends;
    let inner: Box<dyn EmbeddingProvider> = match b.embedder {
        EmbedderKind::Hash => Box::new(HashEmbedder::new(b.embedding_dim, b.pooling, cfg.seed)?),
        EmbedderKind::Remote => Box::new(RemoteEmbedder::new(
            &endpoint(cfg, "embedder")?,
            b.embedder_checkpoint.clone().unwrap_or_default(),
            b.embedding_dim,
            b.pooling,
        )?),
    };
    Ok(match &b.embedding_cache {
        Some(dir) => Embedder::Cached(CachedEmbedder::open(dir.clone(), inner)?),
        None => Embedder::Plain(inner),
    })
}

pub fn build_trainer(cfg: &RunConfig) -> Result<Box<dyn TrainingBackend>> {
    Ok(match cfg.backends.trainer {
        TrainerKind::Mock => Box::new(MockBackend::new()),
        TrainerKind::Remote => Box::new(RemoteTrainer::connect(&endpoint(cfg, "trainer")?)?),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentReport {
    pub train: AugmentationSummary,
    /// Present when evaluation positives were merged into training.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<AugmentationSummary>,
    pub output: usize,
    /// Sample ids whose backtranslation failed, with the reason.
    pub failures: BTreeMap<String, Vec<(u64, String)>>,
}

type LogFn<'a> = Box<dyn Fn(&str, Value) + 'a>;

pub struct Pipeline<'a> {
    cfg: RunConfig,
    ws: Workspace,
    log: LogFn<'a>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::validation(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

impl<'a> Pipeline<'a> {
    /// Output goes to `cfg.output_dir`, which must be set.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let root = cfg
            .output_dir
            .clone()
            .ok_or_else(|| Error::validation("no output directory (set output_dir or pass --out)"))?;
        Ok(Pipeline {
            cfg,
            ws: Workspace::new(root),
            log: Box::new(|_, _| {}),
        })
    }

    pub fn with_log(mut self, log: impl Fn(&str, Value) + 'a) -> Self {
        self.log = Box::new(log);
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    fn event(&self, name: &str, fields: Value) {
        (self.log)(name, fields)
    }

    pub fn write_manifest(&self) -> Result<()> {
        write_text(&self.ws.manifest(), &self.cfg.to_json_pretty())
    }

    fn source_corpus(&self, split: Split) -> Result<Corpus> {
        let path = self
            .cfg
            .data
            .path(split)
            .ok_or_else(|| Error::validation(format!("no {} split configured", split.as_str())))?;
        let format = self.cfg.data.format_of(path)?;
        corpus::ingest(path, format, split)
    }

    /// The normalized copy in the output tree, ingesting it first if needed.
    pub fn corpus(&self, split: Split) -> Result<Corpus> {
        let local = self.ws.corpus(split);
        if local.exists() {
            return corpus::ingest(&local, Format::Jsonl, split);
        }
        let c = self.source_corpus(split)?;
        ensure_parent(&local)?;
        corpus::export(&c, &local, Format::Jsonl)?;
        Ok(c)
    }

    fn splits(&self) -> Vec<Split> {
        let mut v = vec![Split::Train, Split::Evaluation];
        if self.cfg.data.test.is_some() {
            v.push(Split::Test);
        }
        v
    }

    /// Ingests every configured split and writes the per-split statistics.
    pub fn ingest(&self) -> Result<BTreeMap<Split, Corpus>> {
        self.write_manifest()?;
        let mut out = BTreeMap::new();
        for split in self.splits() {
            let c = self.source_corpus(split)?;
            let local = self.ws.corpus(split);
            ensure_parent(&local)?;
            corpus::export(&c, &local, Format::Jsonl)?;
            self.event("ingest", json!({"split": split.as_str(), "samples": c.len()}));
            out.insert(split, c);
        }
        self.write_stats(&out)?;
        Ok(out)
    }

    fn write_stats(&self, corpora: &BTreeMap<Split, Corpus>) -> Result<()> {
        let st: Vec<(Split, corpus::CorpusStats)> = corpora.iter().map(|(s, c)| (*s, stats(c))).collect();
        let json: serde_json::Map<String, Value> = st
            .iter()
            .map(|(s, st)| (s.as_str().to_string(), st.to_json()))
            .collect();
        write_json(&self.ws.stats_json(), &json)?;
        let columns: Vec<(&str, &corpus::CorpusStats)> = st.iter().map(|(s, st)| (s.display_name(), st)).collect();
        write_text(&self.ws.stats_text(), &render_stats_table(&columns))
    }

    /// Augments the training split and, when the recipe asks for it, folds
    /// the augmented evaluation positives in under fresh ids.
    pub fn augment(&self) -> Result<AugmentReport> {
        self.write_manifest()?;
        let translator = build_translator(&self.cfg)?;
        let embedder = build_embedder(&self.cfg)?;
        let train = self.corpus(Split::Train)?;
        let result = augment(&train, &self.cfg.augmentation, translator.as_ref(), embedder.provider());
        let outcome = match result {
            Ok(o) => o,
            Err(e) => {
                embedder.flush()?;
                return Err(e);
            }
        };
        write_audit(&outcome.records, ensure_then(&self.ws.audit(Split::Train))?)?;
        self.event("augment", json!({"split": "train", "summary": outcome.summary}));
        let mut failures = BTreeMap::new();
        failures.insert("train".to_string(), outcome.failures.clone());

        let mut merged = outcome.corpus;
        let mut eval_summary = None;
        if self.cfg.recipe.merge_eval_minority {
            let eval = self.corpus(Split::Evaluation)?;
            let positives = Corpus::new(
                Split::Train,
                eval.iter().filter(|s| s.label == Some(Label::Hate)).cloned().collect(),
            )?;
            let eval_cfg = AugmentationConfig {
                languages_to_augment: self.cfg.recipe.eval_languages_to_augment.clone(),
                ..self.cfg.augmentation.clone()
            };
            let extra = augment(&positives, &eval_cfg, translator.as_ref(), embedder.provider())?;
            write_audit(&extra.records, ensure_then(&self.ws.audit(Split::Evaluation))?)?;
            self.event("augment", json!({"split": "evaluation", "summary": extra.summary}));
            failures.insert("evaluation".to_string(), extra.failures.clone());
            merged = merged.append_renumbered(&extra.corpus)?;
            eval_summary = Some(extra.summary);
        }
        embedder.flush()?;

        corpus::export(&merged, self.ws.augmented(), Format::Jsonl)?;
        let report = AugmentReport {
            train: outcome.summary,
            evaluation: eval_summary,
            output: merged.len(),
            failures,
        };
        write_json(&self.ws.augmentation_summary(), &report)?;
        Ok(report)
    }

    /// The augmented training corpus if present, otherwise the raw split.
    pub fn training_corpus(&self) -> Result<Corpus> {
        let aug = self.ws.augmented();
        if aug.exists() {
            self.event("train.corpus", json!({"source": "augmented"}));
            corpus::ingest(&aug, Format::Jsonl, Split::Train)
        } else {
            self.event("train.corpus", json!({"source": "train"}));
            self.corpus(Split::Train)
        }
    }

    fn model_ids(&self, models: Option<&[String]>) -> Vec<String> {
        models.map_or_else(|| self.cfg.models.clone(), <[String]>::to_vec)
    }

    pub fn train(&self, models: Option<&[String]>) -> Result<Vec<TrainedModel>> {
        self.write_manifest()?;
        let ids = self.model_ids(models);
        let specs = classifiers::resolve(&ids, &self.cfg.encoders, self.cfg.heads)?;
        let backend = build_trainer(&self.cfg)?;
        let corpus = self.training_corpus()?;
        let mut out = Vec::new();
        for spec in &specs {
            let model = classifiers::train(spec, &corpus, &self.cfg.training, backend.as_ref())?;
            let path = self.ws.model(&spec.id);
            ensure_parent(&path)?;
            model.save(&path)?;
            self.event(
                "train",
                json!({
                    "model": spec.id,
                    "backend": model.backend,
                    "samples": corpus.len(),
                    "truncated_samples": model.truncated_samples,
                    "pooling": self.cfg.backends.pooling.as_str(),
                    "fingerprint": model.fingerprint,
                }),
            );
            out.push(model);
        }
        Ok(out)
    }

    fn load_model(&self, id: &str, backend: &dyn TrainingBackend) -> Result<TrainedModel> {
        let path = self.ws.model(id);
        if !path.exists() {
            return Err(Error::validation(format!(
                "model {id} is not trained ({} missing)",
                path.display()
            )));
        }
        TrainedModel::load(&path, backend)
    }

    /// Scores the evaluation split (and the test split, if configured).
    pub fn predict(&self, models: Option<&[String]>) -> Result<BTreeMap<Split, Vec<PredictionSet>>> {
        self.write_manifest()?;
        let backend = build_trainer(&self.cfg)?;
        let mut out: BTreeMap<Split, Vec<PredictionSet>> = BTreeMap::new();
        let splits: Vec<Split> = self.splits().into_iter().filter(|s| *s != Split::Train).collect();
        for id in self.model_ids(models) {
            let model = self.load_model(&id, backend.as_ref())?;
            for &split in &splits {
                let c = self.corpus(split)?;
                let set = classifiers::predict(&model, &c)?;
                let path = self.ws.predictions(split, &id);
                ensure_parent(&path)?;
                save_predictions(&set, &path)?;
                self.event(
                    "predict",
                    json!({"model": id, "split": split.as_str(), "samples": set.len(), "positives": set.positives()}),
                );
                out.entry(split).or_default().push(set);
            }
        }
        Ok(out)
    }

    /// Combines saved member predictions into `predictions/ensemble.jsonl`.
    pub fn ensemble(&self) -> Result<BTreeMap<Split, PredictionSet>> {
        self.write_manifest()?;
        let spec = &self.cfg.ensemble;
        let mut out = BTreeMap::new();
        for split in self.splits().into_iter().filter(|s| *s != Split::Train) {
            let members: Vec<PredictionSet> = spec
                .ids()
                .iter()
                .map(|id| {
                    let path = self.ws.predictions(split, id);
                    if !path.exists() {
                        return Err(Error::validation(format!(
                            "no {} predictions for cascade member {id} ({} missing)",
                            split.as_str(),
                            path.display()
                        )));
                    }
                    load_predictions_as(&path, id)
                })
                .collect::<Result<_>>()?;
            let set = ensemble_from(spec, &members)?;
            save_predictions(&set, self.ws.predictions(split, ENSEMBLE_FILE_STEM))?;
            self.event(
                "ensemble",
                json!({"model": spec.output_id(), "split": split.as_str(), "positives": set.positives()}),
            );
            out.insert(split, set);
        }
        Ok(out)
    }

    /// Row id for a predictions file: its stem, with the ensemble file named
    /// after its members.
    pub fn row_id(&self, path: &Path) -> String {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if stem == ENSEMBLE_FILE_STEM {
            self.cfg.ensemble.output_id()
        } else {
            stem
        }
    }

    fn default_prediction_files(&self) -> Result<Vec<PathBuf>> {
        let dir = self.ws.predictions_dir(Split::Evaluation);
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::validation(format!("no predictions in {}", dir.display())));
        }
        Ok(files)
    }

    /// Scores prediction files against a gold corpus (default: the
    /// evaluation split) and writes the reports.
    pub fn evaluate(&self, files: Option<&[PathBuf]>, gold: Option<&Path>) -> Result<Report> {
        self.write_manifest()?;
        let files = match files {
            Some(f) if !f.is_empty() => f.to_vec(),
            _ => self.default_prediction_files()?,
        };
        let gold = match gold {
            Some(path) => corpus::ingest(path, self.cfg.data.format_of(path)?, Split::Evaluation)?,
            None => self.corpus(Split::Evaluation)?,
        };
        let averaging = self.cfg.metrics.averaging;
        let mut rows = Vec::new();
        let mut confusions: BTreeMap<String, ConfusionMatrix> = BTreeMap::new();
        for path in &files {
            let id = self.row_id(path);
            let set = load_predictions_as(path, &id)?;
            let cm = metrics::confusion(&set, &gold)?;
            let row = metrics::compute_metrics(&cm, averaging);
            self.event(
                "evaluate",
                json!({"model": id, "f1": row.f1, "degenerate": row.degenerate_flags}),
            );
            confusions.insert(id.clone(), cm);
            rows.push((id, row));
        }
        let report = render_report(rows);
        write_json(&self.ws.reports_dir().join("confusion.json"), &confusions)?;
        self.write_report(&report)?;
        Ok(report)
    }

    /// Re-renders a report from a metrics JSON file (default: the one in the
    /// output tree).
    pub fn report(&self, input: Option<&Path>) -> Result<Report> {
        let default = self.ws.metrics();
        let path = input.unwrap_or(&default);
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value =
            serde_json::from_str(&raw).map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        let report = render_report(parse_rows(&value)?);
        self.write_report(&report)?;
        Ok(report)
    }

    fn write_report(&self, report: &Report) -> Result<()> {
        let dir = self.ws.reports_dir();
        write_json(&self.ws.metrics(), &report.json())?;
        write_text(&dir.join("report.txt"), &report.text())?;
        if self.cfg.metrics.plots {
            for c in Column::ALL {
                write_text(&dir.join(format!("{}.svg", c.key())), &report.svg(c))?;
            }
        }
        Ok(())
    }

    /// Every stage in order. The ensemble is skipped when a cascade member is
    /// not among the selected models.
    pub fn run(&self) -> Result<Report> {
        self.ingest()?;
        let summary = self.augment()?;
        self.event("augment.identity", json!({"line": summary.train.identity_line()}));
        self.train(None)?;
        self.predict(None)?;
        if self
            .cfg
            .ensemble
            .ids()
            .iter()
            .all(|id| self.cfg.models.iter().any(|m| m == id))
        {
            self.ensemble()?;
        } else {
            self.event("ensemble.skipped", json!({"reason": "cascade member not selected"}));
        }
        self.evaluate(None, None)
    }
}

fn ensure_then(path: &Path) -> Result<&Path> {
    ensure_parent(path)?;
    Ok(path)
}
