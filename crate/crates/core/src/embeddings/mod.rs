//! Text embeddings and cosine similarity.
//!
//! Providers are pluggable behind [`EmbeddingProvider`]. The crate ships a
//! deterministic character n-gram hashing provider ([`HashEmbedder`]), a
//! fixed lookup table for tests ([`LookupEmbedder`]), a content-addressed
//! on-disk cache ([`CachedEmbedder`]) and an HTTP adapter in
//! [`crate::remote`].

mod cache;
mod hash;
mod lookup;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::CachedEmbedder;
pub use hash::HashEmbedder;
pub use lookup::LookupEmbedder;

/// How token-level vectors collapse into one sentence vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Mean over non-padding tokens.
    #[default]
    Mean,
    /// The first token's vector (the `[CLS]`/`<s>` position for transformer encoders).
    FirstToken,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Mean => "mean",
            Pooling::FirstToken => "first_token",
        }
    }
}

/// A finite, non-empty, double precision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("embedding vector has dimension 0"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("embedding component {i} is not finite")));
        }
        Ok(EmbeddingVector { values })
    }

    /// Widens single precision backend output.
    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Opaque identifier, typically the backend checkpoint name.
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn pooling(&self) -> Pooling;

    fn embed(&self, text: &str) -> Result<EmbeddingVector>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }

    /// Whether concurrent `embed` calls are safe and useful.
    fn reentrant(&self) -> bool {
        false
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn pooling(&self) -> Pooling {
        (**self).pooling()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        (**self).embed(text)
    }
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed_batch(texts)
    }
    fn reentrant(&self) -> bool {
        (**self).reentrant()
    }
}

/// Embeds `text`, checking the precondition (non-empty text) and the
/// provider's dimension contract.
pub fn embed(provider: &dyn EmbeddingProvider, text: &str) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(Error::validation("cannot embed empty text"));
    }
    let v = provider.embed(text)?;
    if v.dim() != provider.dim() {
        return Err(Error::validation(format!(
            "provider `{}` returned dimension {} (declared {})",
            provider.name(),
            v.dim(),
            provider.dim()
        )));
    }
    Ok(v)
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let (a, b) = (a.values(), b.values());
    if a.iter().all(|&v| v == 0.0) || b.iter().all(|&v| v == 0.0) {
        return Err(Error::validation("cosine similarity of a zero vector is undefined"));
    }
    if a == b {
        return Ok(1.0);
    }
    let (dot, na, nb) = raw_products(a, b);
    let sim = if dot.is_finite() && na.is_normal() && nb.is_normal() && na.is_finite() && nb.is_finite() {
        dot / (na.sqrt() * nb.sqrt())
    } else {
        // Rescale so squared norms neither overflow nor underflow.
        let sa = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sb = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let a: Vec<f64> = a.iter().map(|v| v / sa).collect();
        let b: Vec<f64> = b.iter().map(|v| v / sb).collect();
        let (dot, na, nb) = raw_products(&a, &b);
        dot / (na.sqrt() * nb.sqrt())
    };
    Ok(sim.clamp(-1.0, 1.0))
}

fn raw_products(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    a.iter().zip(b).fold((0.0, 0.0, 0.0), |(d, na, nb), (&x, &y)| {
        (d + x * y, na + x * x, nb + y * y)
    })
}
