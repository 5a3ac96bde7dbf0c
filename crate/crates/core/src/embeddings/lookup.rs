use std::collections::HashMap;

use super::{EmbeddingProvider, EmbeddingVector, Pooling};
use crate::error::{Error, Result};

/// Returns fixed vectors for known texts. Unknown text is a transport-style
/// error, as if the backend had no answer. Mostly useful in tests and for
/// replaying vectors recorded elsewhere.
#[derive(Debug, Clone)]
pub struct LookupEmbedder {
    name: String,
    dim: usize,
    table: HashMap<String, EmbeddingVector>,
}

impl LookupEmbedder {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        LookupEmbedder {
            name: name.into(),
            dim,
            table: HashMap::new(),
        }
    }

    pub fn insert(&mut self, text: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let v = EmbeddingVector::new(values)?;
        if v.dim() != self.dim {
            return Err(Error::validation(format!(
                "lookup vector has dimension {} (expected {})",
                v.dim(),
                self.dim
            )));
        }
        self.table.insert(text.into(), v);
        Ok(())
    }

    pub fn with(mut self, text: impl Into<String>, values: Vec<f64>) -> Self {
        self.insert(text, values).expect("valid lookup vector");
        self
    }
}

impl EmbeddingProvider for LookupEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn pooling(&self) -> Pooling {
        Pooling::Mean
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| Error::transport(&self.name, format!("no vector for text {text:?}")))
    }

    fn reentrant(&self) -> bool {
        true
    }
}
