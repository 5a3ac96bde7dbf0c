//! HTTP adapters for out-of-process backends.
//!
//! A backend service exposes JSON endpoints under one base URL:
//!
//! | endpoint             | request                                              | response                    |
//! |----------------------|------------------------------------------------------|-----------------------------|
//! | `POST /embed`        | `{checkpoint, pooling, texts}`                       | `{vectors: [[f64]]}`        |
//! | `POST /translate`    | `{checkpoint, source, target, texts}`                | `{texts: [string]}`         |
//! | `GET /capabilities`  |                                                      | `{heads: [head]}`           |
//! | `POST /train`        | `{spec, config, samples: [{id, text, label, lang}]}` | `{handle}`                  |
//! | `POST /predict`      | `{handle, texts}`                                    | `{scores: [f64]}`           |
//!
//! Connection failures, non-2xx statuses and malformed responses all map to
//! [`Error::Transport`].

use std::time::Duration;

use reqwest::blocking::Client;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augmentation::Translator;
use crate::classifiers::{Head, ModelHandle, ModelSpec, TrainingBackend, TrainingConfig};
use crate::corpus::Corpus;
use crate::embeddings::{EmbeddingProvider, EmbeddingVector, Pooling};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Endpoint {
    name: String,
    base: String,
    client: Client,
}

impl Endpoint {
    fn new(name: &str, base: &str, timeout: Duration) -> Result<Self> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::transport(name, e))?;
        Ok(Endpoint {
            name: name.to_string(),
            base: base.trim_end_matches('/').to_string(),
            client,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.base)
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: &serde_json::Value) -> Result<T> {
        let resp = self
            .client
            .post(self.url(path))
            .json(body)
            .send()
            .map_err(|e| Error::transport(&self.name, e))?;
        self.decode(resp)
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let resp = self
            .client
            .get(self.url(path))
            .send()
            .map_err(|e| Error::transport(&self.name, e))?;
        self.decode(resp)
    }

    fn decode<T: DeserializeOwned>(&self, resp: reqwest::blocking::Response) -> Result<T> {
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(Error::transport(&self.name, format!("HTTP {status}: {body}")));
        }
        resp.json::<T>()
            .map_err(|e| Error::transport(&self.name, format!("bad response body: {e}")))
    }
}

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

/// Sentence embeddings from a remote encoder.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: Endpoint,
    checkpoint: String,
    dim: usize,
    pooling: Pooling,
}

impl RemoteEmbedder {
    pub fn new(base_url: &str, checkpoint: impl Into<String>, dim: usize, pooling: Pooling) -> Result<Self> {
        let checkpoint = checkpoint.into();
        Ok(RemoteEmbedder {
            endpoint: Endpoint::new(&checkpoint, base_url, DEFAULT_TIMEOUT)?,
            checkpoint,
            dim,
            pooling,
        })
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingProvider for RemoteEmbedder {
    fn name(&self) -> &str {
        &self.checkpoint
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn pooling(&self) -> Pooling {
        self.pooling
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self.embed_batch(&[text])?
            .pop()
            .ok_or_else(|| Error::transport(&self.checkpoint, "empty embedding response"))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let resp: EmbedResponse = self.endpoint.post(
            "embed",
            &json!({ "checkpoint": self.checkpoint, "pooling": self.pooling, "texts": texts }),
        )?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::transport(
                &self.checkpoint,
                format!("{} vectors for {} texts", resp.vectors.len(), texts.len()),
            ));
        }
        resp.vectors.into_iter().map(EmbeddingVector::new).collect()
    }

    fn reentrant(&self) -> bool {
        true
    }
}

/// Machine translation through a remote seq2seq model.
#[derive(Debug, Clone)]
pub struct RemoteTranslator {
    endpoint: Endpoint,
    checkpoint: String,
}

impl RemoteTranslator {
    pub fn new(base_url: &str, checkpoint: impl Into<String>) -> Result<Self> {
        let checkpoint = checkpoint.into();
        Ok(RemoteTranslator {
            endpoint: Endpoint::new(&checkpoint, base_url, DEFAULT_TIMEOUT)?,
            checkpoint,
        })
    }
}

#[derive(Deserialize)]
struct TranslateResponse {
    texts: Vec<String>,
}

impl Translator for RemoteTranslator {
    fn name(&self) -> &str {
        &self.checkpoint
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String> {
        let resp: TranslateResponse = self.endpoint.post(
            "translate",
            &json!({ "checkpoint": self.checkpoint, "source": source, "target": target, "texts": [text] }),
        )?;
        resp.texts
            .into_iter()
            .next()
            .ok_or_else(|| Error::transport(&self.checkpoint, "empty translation response"))
    }

    fn reentrant(&self) -> bool {
        true
    }
}

/// Training and inference delegated to a remote service. Capabilities are
/// fetched once at connection time.
#[derive(Debug, Clone)]
pub struct RemoteTrainer {
    endpoint: Endpoint,
    heads: Vec<Head>,
}

#[derive(Deserialize)]
struct Capabilities {
    heads: Vec<Head>,
}

#[derive(Serialize, Deserialize)]
struct HandleState {
    handle: String,
}

#[derive(Deserialize)]
struct ScoresResponse {
    scores: Vec<f64>,
}

impl RemoteTrainer {
    pub fn connect(base_url: &str) -> Result<Self> {
        let endpoint = Endpoint::new("remote-trainer", base_url, Duration::from_secs(24 * 3600))?;
        let caps: Capabilities = endpoint.get("capabilities")?;
        Ok(RemoteTrainer {
            endpoint,
            heads: caps.heads,
        })
    }
}

struct RemoteModel {
    endpoint: Endpoint,
    handle: String,
}

impl ModelHandle for RemoteModel {
    fn scores(&self, texts: &[&str]) -> Result<Vec<f64>> {
        let resp: ScoresResponse = self
            .endpoint
            .post("predict", &json!({ "handle": self.handle, "texts": texts }))?;
        Ok(resp.scores)
    }

    fn state(&self) -> serde_json::Value {
        json!({ "handle": self.handle })
    }
}

impl TrainingBackend for RemoteTrainer {
    fn name(&self) -> &str {
        "remote"
    }

    fn supports(&self, head: Head) -> bool {
        self.heads.contains(&head)
    }

    fn train(&self, spec: &ModelSpec, corpus: &Corpus, cfg: &TrainingConfig) -> Result<Box<dyn ModelHandle>> {
        let samples: Vec<_> = corpus
            .iter()
            .map(|s| json!({ "id": s.id, "text": s.text, "label": s.label, "lang": s.lang }))
            .collect();
        let resp: HandleState = self
            .endpoint
            .post("train", &json!({ "spec": spec, "config": cfg, "samples": samples }))?;
        Ok(Box::new(RemoteModel {
            endpoint: self.endpoint.clone(),
            handle: resp.handle,
        }))
    }

    fn restore(&self, _spec: &ModelSpec, state: &serde_json::Value) -> Result<Box<dyn ModelHandle>> {
        let s: HandleState =
            serde_json::from_value(state.clone()).map_err(|e| Error::validation(format!("remote model state: {e}")))?;
        Ok(Box::new(RemoteModel {
            endpoint: self.endpoint.clone(),
            handle: s.handle,
        }))
    }
}
