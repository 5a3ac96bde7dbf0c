//! Run configuration: one TOML (or JSON manifest) file describing a full
//! pipeline run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentationConfig;
use crate::classifiers::{EncoderSlot, HeadParams, TrainingConfig};
use crate::corpus::{Format, Lang, Split};
use crate::embeddings::Pooling;
use crate::ensemble::CascadeSpec;
use crate::error::{Error, Result};
use crate::metrics::Averaging;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Overrides the extension-based guess.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub train: PathBuf,
    pub evaluation: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

impl DataConfig {
    pub fn path(&self, split: Split) -> Option<&Path> {
        match split {
            Split::Train => Some(&self.train),
            Split::Evaluation => Some(&self.evaluation),
            Split::Test => self.test.as_deref(),
        }
    }

    pub fn format_of(&self, path: &Path) -> Result<Format> {
        self.format
            .or_else(|| Format::from_path(path))
            .ok_or_else(|| Error::validation(format!("{}: cannot infer format; set data.format", path.display())))
    }
}

/// Pipeline recipe switches that are not part of the augmentation algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeConfig {
    /// Fold the evaluation split's positives (and their augmentations) into
    /// the training corpus.
    pub merge_eval_minority: bool,
    /// Languages augmented when evaluation positives are merged.
    pub eval_languages_to_augment: BTreeSet<Lang>,
}

impl Default for RecipeConfig {
    fn default() -> Self {
        RecipeConfig {
            merge_eval_minority: false,
            eval_languages_to_augment: [Lang::Hi].into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslatorKind {
    Identity,
    Perturb,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Hash,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerKind {
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub translator: TranslatorKind,
    pub embedder: EmbedderKind,
    pub trainer: TrainerKind,
    /// Base URL of the remote backend service.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translator_checkpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedder_checkpoint: Option<String>,
    pub embedding_dim: usize,
    pub pooling: Pooling,
    /// Content-addressed embedding cache directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_cache: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            translator: TranslatorKind::Perturb,
            embedder: EmbedderKind::Hash,
            trainer: TrainerKind::Mock,
            endpoint: None,
            translator_checkpoint: None,
            embedder_checkpoint: None,
            embedding_dim: 128,
            pooling: Pooling::Mean,
            embedding_cache: None,
        }
    }
}

impl BackendConfig {
    /// Switches every backend to one family: `mock` or `remote`.
    pub fn select_family(&mut self, family: &str) -> Result<()> {
        match family {
            "mock" => {
                self.translator = TranslatorKind::Perturb;
                self.embedder = EmbedderKind::Hash;
                self.trainer = TrainerKind::Mock;
            }
            "identity" => {
                self.translator = TranslatorKind::Identity;
                self.embedder = EmbedderKind::Hash;
                self.trainer = TrainerKind::Mock;
            }
            "remote" => {
                self.translator = TranslatorKind::Remote;
                self.embedder = EmbedderKind::Remote;
                self.trainer = TrainerKind::Remote;
            }
            other => {
                return Err(Error::validation(format!(
                    "unknown backend `{other}` (expected mock, identity or remote)"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub averaging: Averaging,
    /// Write one SVG bar chart per metric next to the report.
    pub plots: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            averaging: Averaging::PositiveClass,
            plots: true,
        }
    }
}

fn default_models() -> Vec<String> {
    (1..=8).map(|i| format!("M{i}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    pub data: DataConfig,
    #[serde(default)]
    pub augmentation: AugmentationConfig,
    #[serde(default)]
    pub recipe: RecipeConfig,
    pub training: TrainingConfig,
    #[serde(default)]
    pub heads: HeadParams,
    #[serde(default)]
    pub ensemble: CascadeSpec,
    #[serde(default)]
    pub metrics: MetricsConfig,
    /// Checkpoint per encoder slot.
    #[serde(default)]
    pub encoders: BTreeMap<EncoderSlot, String>,
    #[serde(default)]
    pub backends: BackendConfig,
}

impl RunConfig {
    /// Parses TOML, or JSON when the file ends in `.json` (a run manifest).
    /// Relative paths resolve against the file's directory and are stored
    /// absolute, so a written manifest works from anywhere.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| Error::validation(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&raw).map_err(|e| Error::validation(format!("{}: {e}", path.display())))?
        };
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let base = std::path::absolute(base).map_err(|e| Error::io(base, e))?;
        cfg.rebase(&base);
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(raw).map_err(|e| Error::validation(e.to_string()))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.train);
        fix(&mut self.data.evaluation);
        if let Some(p) = self.data.test.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.backends.embedding_cache.as_mut() {
            fix(p);
        }
    }

    /// Propagates the run seed into the training config.
    pub fn resolve(&mut self) {
        self.training.seed = self.seed;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.resolve();
    }

    pub fn validate(&self) -> Result<()> {
        self.augmentation.validate()?;
        self.training.validate()?;
        self.ensemble.validate()?;
        if self.models.is_empty() {
            return Err(Error::validation("no models selected"));
        }
        let mut seen = BTreeSet::new();
        for m in &self.models {
            if crate::classifiers::lookup(m).is_none() {
                return Err(Error::validation(format!("unknown model id `{m}`")));
            }
            if !seen.insert(m) {
                return Err(Error::validation(format!("model `{m}` listed twice")));
            }
        }
        if self.backends.embedding_dim == 0 {
            return Err(Error::validation("backends.embedding_dim must be positive"));
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
