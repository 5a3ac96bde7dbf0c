//! Model registry and the train/predict contract.
//!
//! A [`TrainingBackend`] realizes a [`ModelSpec`]'s head on a corpus and
//! hands back an opaque [`ModelHandle`]. The crate ships the deterministic
//! [`MockBackend`] and an HTTP adapter ([`crate::remote::RemoteTrainer`])
//! for out-of-process transformer fine-tuning.

mod config;
mod mock;
mod spec;

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub use crate::predictions::{
    load_predictions, load_predictions_as, save_predictions, Branch, Prediction, PredictionSet, DECISION_THRESHOLD,
};
pub use config::TrainingConfig;
pub use mock::MockBackend;
pub use spec::{lookup, registry, resolve, EmbeddingSource, EncoderSlot, Head, HeadParams, Layer, ModelSpec};

pub trait TrainingBackend: Send + Sync {
    fn name(&self) -> &str;

    fn supports(&self, head: Head) -> bool;

    fn train(&self, spec: &ModelSpec, corpus: &Corpus, cfg: &TrainingConfig) -> Result<Box<dyn ModelHandle>>;

    /// Rebuilds a handle from [`ModelHandle::state`].
    fn restore(&self, spec: &ModelSpec, state: &serde_json::Value) -> Result<Box<dyn ModelHandle>>;
}

pub trait ModelHandle: Send + Sync {
    /// Positive-class probability per text, in input order.
    fn scores(&self, texts: &[&str]) -> Result<Vec<f64>>;

    /// Serializable state sufficient for [`TrainingBackend::restore`].
    fn state(&self) -> serde_json::Value;
}

pub struct TrainedModel {
    pub spec: ModelSpec,
    pub config: TrainingConfig,
    pub backend: String,
    /// Hash of backend, spec, resolved config and training ids.
    pub fingerprint: String,
    /// Training samples longer than `max_sequence_length` tokens.
    pub truncated_samples: usize,
    handle: Box<dyn ModelHandle>,
}

impl fmt::Debug for TrainedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrainedModel")
            .field("spec", &self.spec.id)
            .field("backend", &self.backend)
            .field("fingerprint", &self.fingerprint)
            .finish_non_exhaustive()
    }
}

/// Whitespace token count, the unit `max_sequence_length` is measured in.
pub(crate) fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn fingerprint(backend: &str, spec: &ModelSpec, cfg: &TrainingConfig, corpus: &Corpus) -> String {
    let ids: Vec<u64> = corpus.ids().collect();
    let canonical = serde_json::json!({
        "backend": backend,
        "spec": spec,
        "config": cfg,
        "ids": ids,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

pub fn train(
    spec: &ModelSpec,
    corpus: &Corpus,
    cfg: &TrainingConfig,
    backend: &dyn TrainingBackend,
) -> Result<TrainedModel> {
    spec.validate()?;
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::validation(format!("{}: training corpus is empty", spec.id)));
    }
    if !corpus.is_labeled() {
        return Err(Error::validation(format!(
            "{}: training corpus is not fully labeled",
            spec.id
        )));
    }
    if !backend.supports(spec.head) {
        return Err(Error::Capability {
            backend: backend.name().to_string(),
            head: spec.head.to_string(),
        });
    }
    let handle = backend.train(spec, corpus, cfg)?;
    Ok(TrainedModel {
        spec: spec.clone(),
        config: cfg.clone(),
        backend: backend.name().to_string(),
        fingerprint: fingerprint(backend.name(), spec, cfg, corpus),
        truncated_samples: corpus
            .iter()
            .filter(|s| token_count(&s.text) > cfg.max_sequence_length)
            .count(),
        handle,
    })
}

/// One scored prediction per sample, batched by the model's batch size.
pub fn predict(model: &TrainedModel, corpus: &Corpus) -> Result<PredictionSet> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot predict on an empty corpus"));
    }
    let mut set = PredictionSet::new(model.spec.id.clone());
    for chunk in corpus.samples().chunks(model.config.batch_size) {
        let texts: Vec<&str> = chunk.iter().map(|s| s.text.as_str()).collect();
        let scores = model.handle.scores(&texts)?;
        if scores.len() != chunk.len() {
            return Err(Error::transport(
                &model.backend,
                format!("returned {} scores for {} texts", scores.len(), chunk.len()),
            ));
        }
        for (s, score) in chunk.iter().zip(scores) {
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::transport(
                    &model.backend,
                    format!("score {score} for sample {} outside [0, 1]", s.id),
                ));
            }
            set.insert(s.id, Prediction::scored(score))?;
        }
    }
    Ok(set)
}

/// Sidecar written next to every trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub spec: ModelSpec,
    pub config: TrainingConfig,
    pub backend: String,
    pub fingerprint: String,
    pub truncated_samples: usize,
    pub layers: Vec<Layer>,
    pub state: serde_json::Value,
}

impl TrainedModel {
    pub fn metadata(&self) -> ModelMetadata {
        ModelMetadata {
            spec: self.spec.clone(),
            config: self.config.clone(),
            backend: self.backend.clone(),
            fingerprint: self.fingerprint.clone(),
            truncated_samples: self.truncated_samples,
            layers: self.spec.layers(),
            state: self.handle.state(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&self.metadata()).map_err(|e| Error::validation(e.to_string()))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, backend: &dyn TrainingBackend) -> Result<TrainedModel> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let meta: ModelMetadata =
            serde_json::from_str(&raw).map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        if meta.backend != backend.name() {
            return Err(Error::validation(format!(
                "{}: trained with backend `{}`, not `{}`",
                path.display(),
                meta.backend,
                backend.name()
            )));
        }
        let handle = backend.restore(&meta.spec, &meta.state)?;
        Ok(TrainedModel {
            spec: meta.spec,
            config: meta.config,
            backend: meta.backend,
            fingerprint: meta.fingerprint,
            truncated_samples: meta.truncated_samples,
            handle,
        })
    }
}
